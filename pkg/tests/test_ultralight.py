import random
import string

import pytest

from parktwin.agent.ultralight import (
    UlCommand,
    UlMeasure,
    parse_command,
    parse_measure,
    render_command,
    render_measure,
)
from parktwin.errors import MalformedCommand, MalformedPayload

from sampledocs import ARRIVAL_PAYLOAD, BULB_COMMAND_OCCUPIED


class TestParseMeasure:
    def test_arrival_payload(self):
        measures = parse_measure(ARRIVAL_PAYLOAD)
        assert len(measures) == 1
        assert measures[0].pairs == (("id", "123456"), ("t", "car"), ("p", "51"))

    def test_empty_payload(self):
        assert parse_measure("") == []

    def test_two_groups(self):
        measures = parse_measure("a|1#b|2")
        assert [m.pairs for m in measures] == [(("a", "1"),), (("b", "2"),)]

    def test_odd_token_count(self):
        with pytest.raises(MalformedPayload):
            parse_measure("a|1|b")

    def test_empty_key(self):
        with pytest.raises(MalformedPayload):
            parse_measure("|1")

    def test_order_preserved(self):
        measures = parse_measure("z|1|a|2|m|3")
        assert measures[0].keys() == ["z", "a", "m"]


class TestCommands:
    def test_bulb_command_wire_form(self):
        assert render_command(UlCommand("bulb:0051", "light", "yellow")) == BULB_COMMAND_OCCUPIED

    def test_minimal_command(self):
        assert render_command(UlCommand("d", "c", "v")) == "d@c|v"

    def test_parse_command(self):
        cmd = parse_command(BULB_COMMAND_OCCUPIED)
        assert cmd == UlCommand("bulb:0051", "light", "yellow")

    def test_empty_field_rejected(self):
        with pytest.raises(MalformedCommand):
            render_command(UlCommand("", "light", "red"))

    def test_parse_missing_separator(self):
        with pytest.raises(MalformedCommand):
            parse_command("bulb:0051")


def _token(rng, alphabet):
    return "".join(rng.choices(alphabet, k=rng.randrange(1, 10)))


def test_measure_round_trip_1000_random():
    alphabet = string.ascii_letters + string.digits + ":._-"
    rng = random.Random(7001)
    for _ in range(1000):
        groups = []
        for _ in range(rng.randrange(1, 4)):
            pairs = tuple(
                (_token(rng, alphabet), _token(rng, alphabet))
                for _ in range(rng.randrange(1, 6))
            )
            groups.append(UlMeasure(pairs))
        wire = render_measure(groups)
        assert parse_measure(wire) == groups


def test_command_round_trip_1000_random():
    alphabet = string.ascii_letters + string.digits + ":._-"
    rng = random.Random(7002)
    for _ in range(1000):
        cmd = UlCommand(_token(rng, alphabet), _token(rng, alphabet), _token(rng, alphabet))
        assert parse_command(render_command(cmd)) == cmd


def test_parse_render_identity_on_wire_text():
    rng = random.Random(7003)
    alphabet = string.ascii_lowercase + string.digits
    for _ in range(300):
        tokens = [_token(rng, alphabet) for _ in range(2 * rng.randrange(1, 5))]
        wire = "|".join(tokens)
        assert render_measure(parse_measure(wire)) == wire
