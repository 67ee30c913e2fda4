"""Two-byte command protocol for daisy-chained vibration units.

Each unit receives two bytes, acts when the address has counted down to
zero, and otherwise forwards the message with the address decremented. The
wire layout is:

    byte 0:  a a a a a a a s      a = address (0..127, hops remaining)
                                  s = start flag (1 start, 0 stop)
    byte 1:  i i i i f f f r      i = intensity level (0..15)
                                  f = frequency index (0..7)
                                  r = reserved, must be 0

Example round trip:

    >>> encode(ChainMessage(address=3, start=True, intensity_level=15,
    ...                     frequency_index=7))
    b'\\x07\\xfe'
    >>> decode(b'\\x07\\xfe').address
    3

A unit processes a message in one hop interval, so a command addressed to
unit k (1-based) lands after k * hop_latency; at the default 125 us per hop
a full 20-unit chain is refreshed within 2.5 ms, well inside one 50 Hz
control tick.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

# -- protocol constants ------------------------------------------------------

ADDRESS_BITS = 7
MAX_ADDRESS = (1 << ADDRESS_BITS) - 1  # 127
MAX_INTENSITY = 15
MAX_FREQUENCY = 7
MESSAGE_SIZE = 2

#: selectable drive frequencies (Hz); index 2 is the resonant default
FREQUENCY_TABLE_HZ = (80, 100, 133, 170, 220, 290, 380, 500)
RESONANT_FREQUENCY_INDEX = 2


class RangeError(ValueError):
    """A field value does not fit its wire encoding."""


class FramingError(ValueError):
    """Received bytes violate the frame layout."""


@dataclass(frozen=True)
class ChainMessage:
    """One decoded command frame."""

    address: int
    start: bool
    intensity_level: int
    frequency_index: int

    def __post_init__(self):
        if not (0 <= int(self.address) <= MAX_ADDRESS):
            raise RangeError(f"address must be 0..{MAX_ADDRESS}, got {self.address}")
        if not (0 <= int(self.intensity_level) <= MAX_INTENSITY):
            raise RangeError(
                f"intensity_level must be 0..{MAX_INTENSITY}, got {self.intensity_level}"
            )
        if not (0 <= int(self.frequency_index) <= MAX_FREQUENCY):
            raise RangeError(
                f"frequency_index must be 0..{MAX_FREQUENCY}, got {self.frequency_index}"
            )
        object.__setattr__(self, "address", int(self.address))
        object.__setattr__(self, "start", bool(self.start))
        object.__setattr__(self, "intensity_level", int(self.intensity_level))
        object.__setattr__(self, "frequency_index", int(self.frequency_index))


@dataclass(frozen=True)
class ChainConfig:
    """Physical chain parameters.

    hop_latency is the per-unit receive/decode/forward time in seconds; the
    default matches a 115.2 kbaud link moving two bytes plus handling.
    """

    units: int = 20
    hop_latency: float = 125e-6

    def __post_init__(self):
        if not (1 <= int(self.units)):
            raise RangeError(f"units must be >= 1, got {self.units}")
        if not (self.hop_latency > 0):
            raise RangeError(f"hop_latency must be positive, got {self.hop_latency}")
        object.__setattr__(self, "units", int(self.units))


@dataclass(frozen=True)
class UnitState:
    """Runtime state of one vibration unit."""

    intensity_level: int = 0
    frequency_index: int = 0
    running: bool = False


def encode(msg: ChainMessage) -> bytes:
    """Encode a message into its two-byte frame.

    Field validation happens in ChainMessage itself, so any constructed
    message encodes; the reserved bit is always emitted as 0.
    """
    b0 = (msg.address << 1) | (1 if msg.start else 0)
    b1 = (msg.intensity_level << 4) | (msg.frequency_index << 1)
    return bytes((b0, b1))


def decode(data: bytes) -> ChainMessage:
    """Decode a two-byte frame.

    Raises:
        FramingError: wrong frame length, or the reserved bit is set.
    """
    if len(data) != MESSAGE_SIZE:
        raise FramingError(f"frame must be {MESSAGE_SIZE} bytes, got {len(data)}")
    b0, b1 = data[0], data[1]
    if b1 & 0x01:
        raise FramingError(f"reserved bit set in frame {data.hex()}")
    return ChainMessage(
        address=b0 >> 1,
        start=bool(b0 & 0x01),
        intensity_level=b1 >> 4,
        frequency_index=(b1 >> 1) & 0x07,
    )


def step_unit(state: UnitState, msg: ChainMessage) -> tuple[UnitState, Optional[ChainMessage]]:
    """One unit handling one message.

    Address 0 means "this unit": the command is executed locally and nothing
    is forwarded. Any other address leaves the unit untouched and forwards
    the message with the address decremented.
    """
    if msg.address == 0:
        executed = UnitState(
            intensity_level=msg.intensity_level if msg.start else 0,
            frequency_index=msg.frequency_index,
            running=msg.start,
        )
        return executed, None
    return state, replace(msg, address=msg.address - 1)


def chain_latency(cfg: ChainConfig, target_unit: int) -> float:
    """Seconds until unit ``target_unit`` (1-based) has executed a command.

    Each unit in the path spends one hop interval receiving and handling the
    frame, so the total is target_unit * hop_latency. Raises RangeError for
    targets outside 1..cfg.units (there is no 0-hop delivery).
    """
    if not (1 <= target_unit <= cfg.units):
        raise RangeError(
            f"target_unit must be 1..{cfg.units}, got {target_unit}"
        )
    return target_unit * cfg.hop_latency


# -- frame delta encoding ----------------------------------------------------


def frame_to_commands(
    levels: Sequence[int],
    previous_levels: Optional[Sequence[int]] = None,
    frequency_index: int = RESONANT_FREQUENCY_INDEX,
    units_per_chain: int = 16,
) -> list[tuple[int, ChainMessage]]:
    """Minimal command list that moves a rig from one frame to the next.

    Channels map onto chains contiguously: channel ch lives on chain
    ch // units_per_chain at address ch % units_per_chain. Only changed
    channels emit anything: a start message when the level changed and is
    nonzero, a stop message when it fell to zero. Returns (chain, message)
    pairs in channel order.
    """
    prev = [0] * len(levels) if previous_levels is None else list(previous_levels)
    if len(prev) != len(levels):
        raise ValueError("frame lengths differ")
    out: list[tuple[int, ChainMessage]] = []
    for ch, (new, old) in enumerate(zip(levels, prev)):
        new = int(new)
        old = int(old)
        if new == old:
            continue
        chain, addr = divmod(ch, units_per_chain)
        if new > 0:
            out.append(
                (chain, ChainMessage(address=addr, start=True,
                                     intensity_level=new,
                                     frequency_index=frequency_index))
            )
        else:
            out.append(
                (chain, ChainMessage(address=addr, start=False,
                                     intensity_level=0,
                                     frequency_index=frequency_index))
            )
    return out


class ChainRig:
    """A bank of daisy chains advanced by an explicit, single-threaded loop.

    The rig owns all unit states; ``apply`` walks each injected message down
    its chain via step_unit until some unit absorbs it, and accounts the
    delivery latency. Nothing here is concurrent by design: timing analysis
    stays exact and reproducible.
    """

    def __init__(self, n_chains: int = 2, units_per_chain: int = 16,
                 hop_latency: float = 125e-6):
        self.cfg = ChainConfig(units=units_per_chain, hop_latency=hop_latency)
        self.units = [
            [UnitState() for _ in range(units_per_chain)] for _ in range(n_chains)
        ]
        self.total_latency = 0.0

    def apply(self, routed: Sequence[tuple[int, ChainMessage]]) -> None:
        for chain, msg in routed:
            states = self.units[chain]
            if msg.address >= len(states):
                raise RangeError(
                    f"address {msg.address} beyond chain of {len(states)} units"
                )
            hops = 0
            m: Optional[ChainMessage] = msg
            for i in range(len(states)):
                hops += 1
                states[i], m = step_unit(states[i], m)
                if m is None:
                    break
            self.total_latency += hops * self.cfg.hop_latency

    def levels(self) -> list[int]:
        """Current per-channel output levels (stopped units report 0)."""
        out = []
        for states in self.units:
            for s in states:
                out.append(s.intensity_level if s.running else 0)
        return out
