"""Scenario file parsing, validation, and overrides."""

import pytest

from dtnsim.scenario import (
    ScenarioError,
    apply_overrides,
    load_scenario,
    parse_scenario_text,
)

MINIMAL = """\
trace = trace.ns_movements
duration = 10
"""

TRACE = """\
$node_(0) set X_ 0.0
$node_(0) set Y_ 0.0
$node_(1) set X_ 10.0
$node_(1) set Y_ 0.0
"""


@pytest.fixture
def scenario_dir(tmp_path):
    (tmp_path / "trace.ns_movements").write_text(TRACE)
    (tmp_path / "scenario.cfg").write_text(MINIMAL)
    return tmp_path


class TestParsing:
    def test_defaults_applied(self, scenario_dir):
        s = load_scenario(scenario_dir / "scenario.cfg")
        assert s.duration_s == 10
        assert s.seeds == (1,)
        assert s.protocol.beacon_interval == 1.0
        assert s.protocol.hop_limit == 50
        assert s.link.data_rate_bps == 12e6
        assert s.queue_capacity == s.protocol.buffer_capacity
        assert s.queue_residency_s == 2.0
        assert s.traffic.end_s == 10  # defaults to duration

    def test_full_key_set(self, scenario_dir):
        text = MINIMAL + (
            "seeds = 4 5\nbeacon_interval = 0.5\nbeacon_randomness = 0.05\n"
            "buffer_capacity = 1e6\nmessage_ttl = 120\nhop_limit = 4\n"
            "max_control_payload = 100\ndata_rate = 54e6\nradio_range = 30\n"
            "loss_probability = 0.1\npropagation_delay = 1e-6\n"
            "queue_capacity = 2e6\nqueue_residency = 3\nmessage_count = 7\n"
            "message_size = 5000\npacket_payload = 500\ntraffic_start = 1\n"
            "traffic_end = 9\n"
        )
        (scenario_dir / "full.cfg").write_text(text)
        s = load_scenario(scenario_dir / "full.cfg")
        assert s.seeds == (4, 5)
        assert s.protocol.buffer_capacity == 1_000_000
        assert s.queue_capacity == 2_000_000
        assert s.traffic.message_count == 7
        assert s.link.loss_probability == 0.1

    def test_comments_and_blank_lines(self):
        raw = parse_scenario_text("# header\n\nduration = 5  # trailing\n")
        assert raw == {"duration": "5"}

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioError, match="unknown key"):
            parse_scenario_text("not_a_key = 5\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ScenarioError, match="line 1"):
            parse_scenario_text("duration 5\n")

    def test_missing_required_key(self, scenario_dir):
        (scenario_dir / "bad.cfg").write_text("duration = 5\n")
        with pytest.raises(ScenarioError, match="trace"):
            load_scenario(scenario_dir / "bad.cfg")

    def test_missing_trace_file_mentions_path(self, scenario_dir):
        (scenario_dir / "bad.cfg").write_text(
            "trace = nowhere.ns_movements\nduration = 5\n"
        )
        with pytest.raises(ScenarioError, match="nowhere.ns_movements"):
            load_scenario(scenario_dir / "bad.cfg")

    def test_nonpositive_duration(self, scenario_dir):
        (scenario_dir / "bad.cfg").write_text("trace = trace.ns_movements\nduration = 0\n")
        with pytest.raises(ScenarioError, match="duration"):
            load_scenario(scenario_dir / "bad.cfg")

    def test_bad_value_type(self, scenario_dir):
        (scenario_dir / "bad.cfg").write_text(MINIMAL + "hop_limit = 2.5\n")
        with pytest.raises(ScenarioError, match="hop_limit"):
            load_scenario(scenario_dir / "bad.cfg")

    def test_traffic_window_outside_duration(self, scenario_dir):
        (scenario_dir / "bad.cfg").write_text(
            MINIMAL + "message_count = 1\ntraffic_end = 99\n"
        )
        with pytest.raises(ScenarioError, match="window"):
            load_scenario(scenario_dir / "bad.cfg")

    def test_invalid_protocol_value_surfaces(self, scenario_dir):
        (scenario_dir / "bad.cfg").write_text(MINIMAL + "buffer_capacity = -5\n")
        with pytest.raises(ScenarioError):
            load_scenario(scenario_dir / "bad.cfg")


class TestOverrides:
    def test_override_applied(self, scenario_dir):
        s = load_scenario(scenario_dir / "scenario.cfg", {"hop_limit": "3"})
        assert s.protocol.hop_limit == 3

    def test_unknown_override_key(self):
        with pytest.raises(ScenarioError, match="unknown"):
            apply_overrides({}, {"bogus": "1"})

    def test_bundled_mini_scenario_loads(self):
        s = load_scenario("scenarios/mini.cfg")
        assert len(s.load_trajectories()) == 3
        assert s.traffic.message_count == 4
