"""Abstract program state: environment, interval constraints and opaque path conditions."""

from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, Mapping, Optional, Tuple

from .ir import BitVecValue, Const, SymExpr, const, mask

# Base of the synthetic address space used for `&v`. Addresses never collide
# with the null pointer and stay well inside 64 bits.
ADDRESS_BASE = 0x1000_0000
ADDRESS_FRAME_STRIDE = 0x10_0000
ADDRESS_SLOT_STRIDE = 0x10


@dataclass(frozen=True)
class Interval:
    """Closed range [lower, upper] in the unsigned order of a fixed width."""

    lower: BitVecValue
    upper: BitVecValue

    def __post_init__(self):
        if self.lower.width != self.upper.width:
            raise ValueError("Interval bounds differ in width")
        if self.lower.bits > self.upper.bits:
            raise ValueError(f"Empty interval [{self.lower.bits}, {self.upper.bits}]")

    @classmethod
    def of(cls, lower: int, upper: int, width: int) -> "Interval":
        return cls(BitVecValue(width, lower), BitVecValue(width, upper))

    @classmethod
    def full(cls, width: int) -> "Interval":
        return cls.of(0, mask(width), width)

    @classmethod
    def point(cls, value: BitVecValue) -> "Interval":
        return cls(value, value)

    @property
    def width(self) -> int:
        return self.lower.width

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    @property
    def is_full(self) -> bool:
        return self.lower.bits == 0 and self.upper.bits == mask(self.width)

    def contains(self, bits: int) -> bool:
        return self.lower.bits <= bits <= self.upper.bits

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        """Return the intersection, or None if it is empty."""
        lower = max(self.lower.bits, other.lower.bits)
        upper = min(self.upper.bits, other.upper.bits)
        if lower > upper:
            return None
        return Interval.of(lower, upper, self.width)

    def __str__(self) -> str:
        return f"[{self.lower.bits}, {self.upper.bits}]"


class ConstraintMap(Mapping[SymExpr, Interval]):
    """Immutable insertion-ordered map from expressions to their interval.

    Updates return a new map; an empty interval is never stored.
    """

    def __init__(self, entries: Optional[Dict[SymExpr, Interval]] = None):
        self._entries: Dict[SymExpr, Interval] = dict(entries or {})

    def __getitem__(self, key: SymExpr) -> Interval:
        return self._entries[key]

    def __iter__(self) -> Iterator[SymExpr]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConstraintMap):
            return NotImplemented
        return list(self._entries.items()) == list(other._entries.items())

    def __hash__(self):
        return hash(tuple(self._entries.items()))

    def constrain(self, expr: SymExpr, interval: Interval) -> Optional["ConstraintMap"]:
        """Intersect `interval` into the entry for `expr`.

        Returns:
            The updated map, or None if the intersection is empty.
        """
        if interval.width != expr.width:
            raise ValueError(f"Interval width {interval.width} does not match {expr} ({expr.width})")
        current = self._entries.get(expr)
        narrowed = interval if current is None else current.intersect(interval)
        if narrowed is None:
            return None
        if narrowed == current:
            return self
        entries = dict(self._entries)
        entries[expr] = narrowed
        return ConstraintMap(entries)

    def admit(self, expr: SymExpr) -> "ConstraintMap":
        """Record `expr` with the full range unless it is already constrained."""
        if expr in self._entries:
            return self
        entries = dict(self._entries)
        entries[expr] = Interval.full(expr.width)
        return ConstraintMap(entries)

    def interval_of(self, expr: SymExpr) -> Interval:
        if isinstance(expr, Const):
            return Interval.point(expr.value)
        return self._entries.get(expr, Interval.full(expr.width))

    def __str__(self) -> str:
        return "{" + ", ".join(f"{k}: {v}" for k, v in self._entries.items()) + "}"


@dataclass(frozen=True)
class OpaqueCondition:
    """A path condition the interval solver could not refine."""

    cond: SymExpr
    truth: bool

    def __str__(self) -> str:
        return f"{self.cond}={'T' if self.truth else 'F'}"


@dataclass(frozen=True)
class ProgramPoint:
    function: str
    block: int
    index: int = 0

    def __str__(self) -> str:
        return f"{self.function}:B{self.block}.{self.index}"


@dataclass(frozen=True)
class Frame:
    """One activation on the symbolic call stack."""

    function: str
    point: ProgramPoint
    env: Tuple[Tuple[str, SymExpr], ...] = ()
    return_to: Optional[str] = None
    visits: Tuple[Tuple[int, int], ...] = ()

    def lookup(self, name: str) -> Optional[SymExpr]:
        for key, value in self.env:
            if key == name:
                return value
        return None

    def bind(self, name: str, value: SymExpr) -> "Frame":
        env = tuple((k, v) for k, v in self.env if k != name) + ((name, value),)
        return replace(self, env=env)

    def visit_count(self, block: int) -> int:
        return dict(self.visits).get(block, 0)

    def visit(self, block: int) -> "Frame":
        counts = dict(self.visits)
        counts[block] = counts.get(block, 0) + 1
        return replace(self, visits=tuple(sorted(counts.items())))


@dataclass(frozen=True)
class ProgramState:
    """A node's abstract state: call stack (with environments), intervals, opaque conditions."""

    frames: Tuple[Frame, ...]
    constraints: ConstraintMap = field(default_factory=ConstraintMap)
    opaque: Tuple[OpaqueCondition, ...] = ()
    addresses: Tuple[Tuple[int, Tuple[int, str]], ...] = ()

    @property
    def frame(self) -> Frame:
        return self.frames[-1]

    @property
    def depth(self) -> int:
        return len(self.frames)

    @property
    def program_point(self) -> ProgramPoint:
        return self.frame.point

    @property
    def env(self) -> Dict[str, SymExpr]:
        return dict(self.frame.env)

    def lookup(self, name: str) -> Optional[SymExpr]:
        return self.frame.lookup(name)

    def bind(self, name: str, value: SymExpr, depth: Optional[int] = None) -> "ProgramState":
        """Bind `name` in the top frame, or in the frame at `depth` (1-based)."""
        index = len(self.frames) - 1 if depth is None else depth - 1
        frames = list(self.frames)
        frames[index] = frames[index].bind(name, value)
        return replace(self, frames=tuple(frames))

    def with_frame(self, frame: Frame) -> "ProgramState":
        return replace(self, frames=self.frames[:-1] + (frame,))

    def at(self, point: ProgramPoint) -> "ProgramState":
        return self.with_frame(replace(self.frame, point=point))

    def push(self, frame: Frame) -> "ProgramState":
        return replace(self, frames=self.frames + (frame,))

    def pop(self) -> Tuple[Frame, "ProgramState"]:
        """Drop the top frame; addresses of its locals stop resolving."""
        depth = len(self.frames) - 1
        live = tuple(entry for entry in self.addresses if entry[1][0] <= depth)
        return self.frames[-1], replace(self, frames=self.frames[:-1], addresses=live)

    def with_constraints(self, constraints: ConstraintMap) -> "ProgramState":
        return replace(self, constraints=constraints)

    def add_opaque(self, cond: SymExpr, truth: bool) -> "ProgramState":
        condition = OpaqueCondition(cond, truth)
        if condition in self.opaque:
            return self
        return replace(self, opaque=self.opaque + (condition,))

    def address_of(self, name: str, slot: int) -> Tuple[Const, "ProgramState"]:
        """Synthetic address of variable `name` in the top frame."""
        address = ADDRESS_BASE + self.depth * ADDRESS_FRAME_STRIDE + slot * ADDRESS_SLOT_STRIDE
        target = (self.depth, name)
        if (address, target) in self.addresses:
            return const(address, 64), self
        return const(address, 64), replace(self, addresses=self.addresses + ((address, target),))

    def resolve_address(self, pointer: SymExpr) -> Optional[Tuple[int, str]]:
        """Return (frame depth, variable) if `pointer` is a known live address."""
        if not isinstance(pointer, Const):
            return None
        for address, (depth, name) in self.addresses:
            if address == pointer.value.bits:
                return depth, name
        return None
