"""Program-enumeration approximation of an algorithmic prior.

A monotone machine turns program bits into output bits.  Enumerating
all programs up to a length cap and crediting 2^-l(p) to each output
prefix the program reaches first yields a semimeasure table: a lower
bound on the ideal prior that only grows as the cap or the fuel budget
grows.  Normalizing sibling masses turns the table into a proper
sequence measure.

This module is demonstrative.  The bound-verification code uses
explicit weighted mixtures, which have exact weights; the table here
shows the enumeration route on machines small enough to inspect.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

from .measures import BinaryString, SequenceMeasure

HALTED = "halted"
RUNNING = "running"
NEEDS_INPUT = "needs-more-input"

NO_CONTINUATION_MESSAGE = "no continuation mass"


class SemimeasureError(ValueError):
    """Table construction or normalization failure."""


class MonotoneMachine:
    """Deterministic machine whose output grows with its program.

    Subclasses implement run(program, fuel) returning (output, status)
    with status one of HALTED, RUNNING (fuel exhausted) or NEEDS_INPUT
    (all program bits consumed, more wanted).  Two invariants matter:
    extending the program only extends the output, and raising fuel
    only extends the output.
    """

    name = "machine"

    def run(self, program, fuel):
        raise NotImplementedError


class EchoMachine(MonotoneMachine):
    """Copies program bits to the output, one per fuel step.

    The analytic ground truth: the only minimal program for s is s
    itself, so every mass is exactly 2^-l(s) and normalization gives
    the uniform measure.
    """

    name = "echo"

    def run(self, program, fuel):
        program = tuple(program)
        if fuel < len(program):
            return program[:fuel], RUNNING
        return program, NEEDS_INPUT


class RegisterMachine(MonotoneMachine):
    """Two-register machine with a 3-bit instruction code.

    Instructions are read most significant bit first:

        000 HALT  stop
        001 OUT0  emit 0
        010 OUT1  emit 1
        011 OUTA  emit the low bit of a, then shift a right
        100 INC   a += 1
        101 SWP   swap a and b
        110 ADD   a += b
        111 REP   re-emit everything emitted so far

    Every instruction costs one fuel step except REP, which costs one
    plus the number of bits it copies and only executes if the full
    cost is affordable; an unaffordable REP consumes the remaining fuel
    and emits nothing.  That atomicity keeps the output monotone in the
    fuel budget.
    """

    name = "register"

    def run(self, program, fuel):
        program = tuple(program)
        a = 0
        b = 0
        out: list[int] = []
        pos = 0
        remaining = fuel
        while True:
            if remaining <= 0:
                return tuple(out), RUNNING
            if pos + 3 > len(program):
                return tuple(out), NEEDS_INPUT
            opcode = program[pos] << 2 | program[pos + 1] << 1 | program[pos + 2]
            pos += 3
            if opcode == 0:
                return tuple(out), HALTED
            if opcode == 7:
                cost = 1 + len(out)
                if cost > remaining:
                    return tuple(out), RUNNING
                remaining -= cost
                out.extend(out)
                continue
            remaining -= 1
            if opcode == 1:
                out.append(0)
            elif opcode == 2:
                out.append(1)
            elif opcode == 3:
                out.append(a & 1)
                a >>= 1
            elif opcode == 4:
                a += 1
            elif opcode == 5:
                a, b = b, a
            elif opcode == 6:
                a += b


def program_bits_from_hex(text: str) -> tuple[int, ...]:
    """Hex digits to program bits, most significant bit first."""
    text = text.strip()
    if not text:
        return ()
    try:
        value = int(text, 16)
    except ValueError:
        raise SemimeasureError(f"not a hex program: {text!r}") from None
    width = 4 * len(text)
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


@dataclass(frozen=True)
class SemimeasureTable:
    """Accumulated program mass per output string, in exact units.

    Masses are stored as integer multiples of 2^-cap, so merging and
    comparison across runs are exact.  mass(s0) + mass(s1) <= mass(s)
    holds by construction, with slack wherever programs halt or run out
    of fuel.
    """

    machine_name: str
    cap: int
    fuel: int
    depth: int
    units: dict

    def mass_units(self, s: BinaryString) -> int:
        return self.units.get(s.bits, 0)

    def mass(self, s: BinaryString) -> float:
        return math.ldexp(self.mass_units(s), -self.cap)

    def to_json(self) -> str:
        payload = {
            "schema": "semimeasure-table/1",
            "machine": self.machine_name,
            "cap": self.cap,
            "fuel": self.fuel,
            "depth": self.depth,
            "units": {
                "".join(map(str, bits)): count
                for bits, count in self.units.items()
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SemimeasureTable":
        payload = json.loads(text)
        if payload.get("schema") != "semimeasure-table/1":
            raise SemimeasureError(
                f"unrecognized table schema: {payload.get('schema')!r}"
            )
        units = {
            tuple(int(c) for c in key): int(count)
            for key, count in payload["units"].items()
        }
        return cls(
            machine_name=payload["machine"],
            cap=int(payload["cap"]),
            fuel=int(payload["fuel"]),
            depth=int(payload["depth"]),
            units=units,
        )


def approximate_mass(
    machine: MonotoneMachine, cap: int, fuel: int, depth: int,
) -> SemimeasureTable:
    """Enumerate programs up to cap bits and credit output prefixes.

    A program p is credited 2^-l(p) toward output prefix s exactly when
    its output starts with s and the one-bit-shorter program had not
    yet produced l(s) bits, so each s collects its minimal programs
    only.  Programs still running at the fuel limit keep the bits they
    emitted; whatever they would emit later is simply missing, which
    keeps every mass a lower bound on the unbounded-fuel value.

    The walk visits programs in length then lexicographic order.  A
    halted or fuel-starved program is not extended (its extensions
    produce the same output and are never minimal), and neither is one
    whose output already covers the table depth.
    """
    if cap < 1:
        raise SemimeasureError(f"cap must be >= 1, got {cap}")
    if fuel < 1:
        raise SemimeasureError(f"fuel must be >= 1, got {fuel}")
    if depth < 1:
        raise SemimeasureError(f"depth must be >= 1, got {depth}")

    units: dict[tuple, int] = {}
    queue = deque([((), -1)])
    while queue:
        program, parent_len = queue.popleft()
        output, status = machine.run(program, fuel)
        credit = 1 << (cap - len(program))
        top = min(len(output), depth)
        for m in range(parent_len + 1, top + 1):
            key = tuple(output[:m])
            units[key] = units.get(key, 0) + credit
        if status == NEEDS_INPUT and len(program) < cap and len(output) < depth:
            queue.append((program + (0,), len(output)))
            queue.append((program + (1,), len(output)))
    return SemimeasureTable(
        machine_name=machine.name, cap=cap, fuel=fuel, depth=depth, units=units,
    )


def normalize(table: SemimeasureTable, s: BinaryString, bit: int) -> float:
    """mass(s.bit) over the two sibling masses."""
    if bit not in (0, 1):
        raise SemimeasureError(f"bit must be 0 or 1, got {bit!r}")
    zero = table.mass_units(s.extended(0))
    one = table.mass_units(s.extended(1))
    if zero + one == 0:
        raise SemimeasureError(NO_CONTINUATION_MESSAGE)
    return (one if bit else zero) / (zero + one)


class TableMeasure(SequenceMeasure):
    """Proper measure induced by chaining normalized table masses.

    The empty string gets probability one and each extension multiplies
    in a normalized sibling ratio, so marginalization holds exactly by
    construction wherever the table has continuation mass.
    """

    def __init__(self, table: SemimeasureTable, name: str | None = None):
        if name is None:
            name = f"table({table.machine_name}, cap={table.cap})"
        self.name = name
        self.table = table

    def log_prefix_probability(self, s: BinaryString) -> float:
        if len(s) > self.table.depth:
            raise SemimeasureError(
                f"table depth {self.table.depth} cannot price a length "
                f"{len(s)} string"
            )
        total = 0.0
        for i, bit in enumerate(s):
            p = normalize(self.table, s.prefix(i), bit)
            if p == 0.0:
                return -math.inf
            total += math.log(p)
        return total


def as_measure(table: SemimeasureTable, name: str | None = None) -> TableMeasure:
    """Wrap a table as a SequenceMeasure."""
    return TableMeasure(table, name)
