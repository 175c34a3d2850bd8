import itertools
import math

import pytest

from seqpred.measures import BinaryString
from seqpred.semimeasure import (
    HALTED,
    NEEDS_INPUT,
    NO_CONTINUATION_MESSAGE,
    RUNNING,
    EchoMachine,
    RegisterMachine,
    SemimeasureError,
    SemimeasureTable,
    approximate_mass,
    as_measure,
    normalize,
    program_bits_from_hex,
)

EMPTY = BinaryString.empty()


def brute_force_units(machine, cap, fuel, depth):
    """Literal minimal-program crediting over every program up to cap.

    Independent of the enumeration order and pruning in
    approximate_mass: run the machine on all 2^0 + ... + 2^cap
    programs, and credit a prefix to a program exactly when the
    one-bit-shorter program had not yet emitted that many bits.
    """
    units = {}
    for length in range(cap + 1):
        for bits in itertools.product((0, 1), repeat=length):
            out, _ = machine.run(bits, fuel)
            if length == 0:
                parent_len = -1
            else:
                parent_out, _ = machine.run(bits[:-1], fuel)
                parent_len = len(parent_out)
            for m in range(parent_len + 1, min(len(out), depth) + 1):
                key = tuple(out[:m])
                units[key] = units.get(key, 0) + (1 << (cap - length))
    return units


class TestProgramParsing:
    def test_hex_round_trip(self):
        assert program_bits_from_hex("47F0") == (
            0, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0,
        )

    def test_empty_and_junk(self):
        assert program_bits_from_hex("") == ()
        assert program_bits_from_hex(" a ") == (1, 0, 1, 0)
        with pytest.raises(SemimeasureError, match="not a hex program"):
            program_bits_from_hex("0x?")


class TestRegisterMachine:
    def setup_method(self):
        self.machine = RegisterMachine()

    def test_empty_program_wants_input(self):
        assert self.machine.run((), 8) == ((), NEEDS_INPUT)

    def test_halt_stops_immediately(self):
        assert self.machine.run((0, 0, 0, 1, 1, 1), 8) == ((), HALTED)

    def test_partial_opcode_wants_input(self):
        assert self.machine.run((0, 1), 8) == ((), NEEDS_INPUT)

    def test_repeat_doubles_output(self):
        out, status = self.machine.run(program_bits_from_hex("47F0"), 32)
        assert "".join(map(str, out)) == "10101010"
        assert status == HALTED

    def test_register_arithmetic_reaches_output(self):
        # INC INC OUTA OUTA HALT: a counts to 2, then its bits come out
        # low bit first.
        program = (1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1, 1, 0, 0, 0)
        out, status = self.machine.run(program, 32)
        assert out == (0, 1)
        assert status == HALTED

    def test_swap_and_add(self):
        # INC SWP INC ADD OUTA leaves a = 2 and emits its low bit.
        program = (1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1)
        out, status = self.machine.run(program, 32)
        assert out == (0,)
        assert status == NEEDS_INPUT

    def test_unaffordable_repeat_emits_nothing(self):
        # OUT1 REP needs 1 + (1 + 1) fuel; at 2 the copy never starts.
        program = (0, 1, 0, 1, 1, 1)
        assert self.machine.run(program, 2) == ((1,), RUNNING)
        assert self.machine.run(program, 3) == ((1, 1), RUNNING)
        assert self.machine.run(program, 4) == ((1, 1), NEEDS_INPUT)

    def test_output_monotone_in_fuel(self):
        program = program_bits_from_hex("47F0")
        previous = ()
        for fuel in range(1, 16):
            out, _ = self.machine.run(program, fuel)
            assert out[: len(previous)] == previous
            previous = out

    def test_output_monotone_in_program(self):
        fuel = 12
        for length in range(7):
            for bits in itertools.product((0, 1), repeat=length):
                out, status = self.machine.run(bits, fuel)
                if status != NEEDS_INPUT:
                    continue
                for bit in (0, 1):
                    longer, _ = self.machine.run(bits + (bit,), fuel)
                    assert longer[: len(out)] == out


class TestEchoMachine:
    def test_copies_program(self):
        machine = EchoMachine()
        assert machine.run((1, 0, 1), 8) == ((1, 0, 1), NEEDS_INPUT)
        assert machine.run((1, 0, 1), 2) == ((1, 0), RUNNING)


class TestApproximateMass:
    def test_echo_cap_two_by_hand(self):
        # Programs: eps credits eps; 0 and 1 credit themselves; the four
        # two-bit programs credit their own second bit.  In units of
        # 2^-2 that is 4 at the root, 2 per child, 1 per grandchild.
        table = approximate_mass(EchoMachine(), cap=2, fuel=8, depth=4)
        assert table.units == {
            (): 4,
            (0,): 2, (1,): 2,
            (0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1,
        }
        assert table.mass(EMPTY) == 1.0
        assert table.mass(BinaryString.parse("0")) == 0.5
        assert normalize(table, EMPTY, 0) == 0.5

    def test_echo_is_uniform(self):
        table = approximate_mass(EchoMachine(), cap=8, fuel=16, depth=5)
        for n in range(6):
            s = BinaryString((1,) * n)
            assert table.mass(s) == pytest.approx(2.0 ** -n, abs=1e-12)

    def test_matches_brute_force_register(self):
        machine = RegisterMachine()
        got = approximate_mass(machine, cap=8, fuel=16, depth=4)
        assert got.units == brute_force_units(machine, 8, 16, 4)

    def test_matches_brute_force_starved_fuel(self):
        machine = RegisterMachine()
        got = approximate_mass(machine, cap=9, fuel=6, depth=5)
        assert got.units == brute_force_units(machine, 9, 6, 5)

    def test_matches_brute_force_echo(self):
        machine = EchoMachine()
        got = approximate_mass(machine, cap=6, fuel=3, depth=6)
        assert got.units == brute_force_units(machine, 6, 3, 6)

    def test_semimeasure_defect(self):
        table = approximate_mass(RegisterMachine(), cap=12, fuel=48, depth=6)
        assert table.mass(EMPTY) <= 1.0
        for bits in table.units:
            parent = table.units[bits]
            children = (
                table.units.get(bits + (0,), 0)
                + table.units.get(bits + (1,), 0)
            )
            assert children <= parent

    def test_mass_grows_with_cap(self):
        small = approximate_mass(RegisterMachine(), cap=10, fuel=48, depth=6)
        large = approximate_mass(RegisterMachine(), cap=12, fuel=48, depth=6)
        for bits, count in small.units.items():
            assert math.ldexp(count, -10) <= math.ldexp(
                large.units.get(bits, 0), -12
            ) + 1e-15

    def test_mass_grows_with_fuel(self):
        starved = approximate_mass(RegisterMachine(), cap=10, fuel=8, depth=6)
        fed = approximate_mass(RegisterMachine(), cap=10, fuel=48, depth=6)
        for bits, count in starved.units.items():
            assert count <= fed.units.get(bits, 0)

    def test_deterministic(self):
        a = approximate_mass(RegisterMachine(), cap=10, fuel=24, depth=5)
        b = approximate_mass(RegisterMachine(), cap=10, fuel=24, depth=5)
        assert a.units == b.units

    def test_parameter_validation(self):
        machine = EchoMachine()
        with pytest.raises(SemimeasureError, match="cap"):
            approximate_mass(machine, cap=0, fuel=8, depth=4)
        with pytest.raises(SemimeasureError, match="fuel"):
            approximate_mass(machine, cap=4, fuel=0, depth=4)
        with pytest.raises(SemimeasureError, match="depth"):
            approximate_mass(machine, cap=4, fuel=8, depth=0)


class TestNormalize:
    def synthetic(self):
        return SemimeasureTable(
            machine_name="synthetic", cap=4, fuel=8, depth=2,
            units={(): 16, (0,): 6, (1,): 2, (0, 0): 3, (0, 1): 1},
        )

    def test_sibling_ratio(self):
        table = self.synthetic()
        assert normalize(table, EMPTY, 0) == pytest.approx(0.75)
        assert normalize(table, EMPTY, 1) == pytest.approx(0.25)
        assert normalize(table, BinaryString.parse("0"), 1) == pytest.approx(
            0.25
        )

    def test_no_continuation_mass(self):
        table = self.synthetic()
        with pytest.raises(SemimeasureError, match=NO_CONTINUATION_MESSAGE):
            normalize(table, BinaryString.parse("1"), 0)

    def test_bit_validation(self):
        with pytest.raises(SemimeasureError, match="bit"):
            normalize(self.synthetic(), EMPTY, 2)


class TestTableMeasure:
    def test_marginalization_where_mass_exists(self):
        table = approximate_mass(RegisterMachine(), cap=12, fuel=48, depth=5)
        measure = as_measure(table)
        for text in ("", "1", "11", "10"):
            s = BinaryString.parse(text)
            total = sum(
                measure.prefix_probability(s.extended(bit)) for bit in (0, 1)
            )
            assert total == pytest.approx(measure.prefix_probability(s))

    def test_depth_guard(self):
        table = approximate_mass(EchoMachine(), cap=4, fuel=8, depth=3)
        measure = as_measure(table)
        with pytest.raises(SemimeasureError, match="depth"):
            measure.log_prefix_probability(BinaryString.parse("0101"))

    def test_name_defaults_to_machine(self):
        table = approximate_mass(EchoMachine(), cap=4, fuel=8, depth=3)
        assert as_measure(table).name == "table(echo, cap=4)"
        assert as_measure(table, "m_hat").name == "m_hat"


class TestSerialization:
    def test_round_trip(self):
        table = approximate_mass(RegisterMachine(), cap=10, fuel=24, depth=5)
        clone = SemimeasureTable.from_json(table.to_json())
        assert clone == table

    def test_rejects_unknown_schema(self):
        with pytest.raises(SemimeasureError, match="schema"):
            SemimeasureTable.from_json('{"schema": "something-else"}')
