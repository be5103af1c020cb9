"""Binary serial framing for the microcontroller -> drive computer link.

Wire format, 14 bytes per frame, little-endian:

    offset  size  field
    0       2     magic 0xAA 0x55
    2       1     seq (u8, wrapping)
    3       4     encoder_ticks (i32, signed cumulative)
    7       2     yaw_rate (i16, centirad/s, truncated toward zero)
    9       2     accel_long (i16, mm/s^2, truncated toward zero)
    11      2     accel_lat (i16, mm/s^2, truncated toward zero)
    13      1     crc: CRC-8 poly 0x07 init 0x00 over bytes 2..12

Out-of-range physical values saturate at the integer limits rather than
failing. The parser is a greedy scanner: it never raises on any input,
resynchronizes on the next magic candidate after a CRC failure, and
reports anomalies through ParseDiagnostics.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

MAGIC = b"\xaa\x55"
FRAME_SIZE = 14
_PAYLOAD = struct.Struct("<ihhh")

_CRC_TABLE = []
for _byte in range(256):
    _crc = _byte
    for _ in range(8):
        _crc = ((_crc << 1) ^ 0x07 if _crc & 0x80 else _crc << 1) & 0xFF
    _CRC_TABLE.append(_crc)


def crc8(data: bytes) -> int:
    """CRC-8, polynomial 0x07, init 0x00."""
    crc = 0
    table = _CRC_TABLE
    for b in data:
        crc = table[crc ^ b]
    return crc


def _saturate(value: int, lo: int, hi: int) -> int:
    return lo if value < lo else hi if value > hi else value


@dataclass(frozen=True)
class SensorFrame:
    """Decoded wire frame; integer fields are in wire units."""

    seq: int
    encoder_ticks: int      # cumulative, signed
    yaw_rate_cds: int       # centirad/s
    accel_long_mm: int      # mm/s^2
    accel_lat_mm: int       # mm/s^2

    @property
    def yaw_rate(self) -> float:
        return self.yaw_rate_cds / 100.0

    @property
    def accel_long(self) -> float:
        return self.accel_long_mm / 1000.0

    @property
    def accel_lat(self) -> float:
        return self.accel_lat_mm / 1000.0


def encode_frame(
    seq: int,
    encoder_ticks: int,
    yaw_rate: float,
    accel_long: float,
    accel_lat: float,
) -> bytes:
    """Pack one 14-byte frame from physical units (saturating)."""
    # round to nearest so decode -> encode is byte-stable
    body = bytes([seq & 0xFF]) + _PAYLOAD.pack(
        _saturate(int(encoder_ticks), -(2**31), 2**31 - 1),
        _saturate(round(yaw_rate * 100.0), -(2**15), 2**15 - 1),
        _saturate(round(accel_long * 1000.0), -(2**15), 2**15 - 1),
        _saturate(round(accel_lat * 1000.0), -(2**15), 2**15 - 1),
    )
    return MAGIC + body + bytes([crc8(body)])


def encode_sample(sample, seq: int) -> bytes:
    """Encode a sim RawSensorSample (cumulative ticks go on the wire)."""
    return encode_frame(
        seq,
        sample.encoder_total,
        sample.yaw_rate,
        sample.accel_long,
        sample.accel_lat,
    )


def _decode_body(body: bytes) -> SensorFrame:
    ticks, yaw, along, alat = _PAYLOAD.unpack(body[1:])
    return SensorFrame(
        seq=body[0],
        encoder_ticks=ticks,
        yaw_rate_cds=yaw,
        accel_long_mm=along,
        accel_lat_mm=alat,
    )


@dataclass
class ParseDiagnostics:
    resyncs: int = 0
    crc_failures: int = 0
    truncated: int = 0

    def merge(self, other: "ParseDiagnostics") -> None:
        self.resyncs += other.resyncs
        self.crc_failures += other.crc_failures
        self.truncated += other.truncated

    def clean(self) -> bool:
        return self.resyncs == 0 and self.crc_failures == 0 and self.truncated == 0


class StreamParser:
    """Incremental frame scanner with resynchronization.

    Feed arbitrary byte chunks; complete valid frames come back in order.
    The unconsumed tail (a partial frame or a possible magic prefix) is
    kept between feeds, so frames split across chunks are handled. A run
    of skipped bytes counts as one resync when the scanner locks onto the
    next valid frame.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self._skipping = False
        self.diagnostics = ParseDiagnostics()

    def feed(self, chunk: bytes) -> list[SensorFrame]:
        self._buf.extend(chunk)
        frames: list[SensorFrame] = []
        buf = self._buf
        pos = 0
        while True:
            idx = buf.find(MAGIC, pos)
            if idx < 0:
                # no frameable magic left; drop garbage, keep a possible
                # trailing 0xAA that the next chunk may complete
                end = len(buf)
                tail = end - 1 if end > pos and buf[end - 1] == MAGIC[0] else end
                if tail > pos:
                    self._skipping = True
                pos = tail
                break
            if idx > pos:
                self._skipping = True
            if idx + FRAME_SIZE > len(buf):
                pos = idx  # partial frame candidate, wait for more bytes
                break
            body = bytes(buf[idx + 2 : idx + 13])
            if crc8(body) == buf[idx + 13]:
                frames.append(_decode_body(body))
                if self._skipping:
                    self.diagnostics.resyncs += 1
                    self._skipping = False
                pos = idx + FRAME_SIZE
            else:
                self.diagnostics.crc_failures += 1
                self._skipping = True
                pos = idx + 1
        del buf[:pos]
        return frames

    def pending(self) -> int:
        """Bytes held back waiting for frame completion."""
        return len(self._buf)

    def pending_bytes(self) -> bytes:
        return bytes(self._buf)


def parse_stream(data: bytes) -> tuple[list[SensorFrame], ParseDiagnostics]:
    """One-shot parse of a capture.

    A trailing partial frame (buffer starts with a magic prefix) counts as
    truncated; a trailing garbage run that never resynchronized counts as
    one resync, since no further bytes will arrive.
    """
    parser = StreamParser()
    frames = parser.feed(data)
    diags = parser.diagnostics
    tail = parser.pending_bytes()
    if tail and tail[0] == MAGIC[0]:
        diags.truncated += 1
    elif parser._skipping:
        diags.resyncs += 1
    return frames, diags


def gap_detect(frames: list[SensorFrame]) -> list[tuple[int, int]]:
    """Dropped-frame counts derived from seq deltas modulo 256.

    Returns (index, missing_count) for every arrival whose seq skipped
    ahead of its predecessor.
    """
    gaps: list[tuple[int, int]] = []
    for i in range(1, len(frames)):
        missing = (frames[i].seq - frames[i - 1].seq - 1) % 256
        if missing:
            gaps.append((i, missing))
    return gaps


def frames_to_csv(frames: list[SensorFrame]) -> str:
    lines = ["seq,encoder_ticks,yaw_rate_rad_s,accel_long_m_s2,accel_lat_m_s2"]
    for f in frames:
        lines.append(
            f"{f.seq},{f.encoder_ticks},{f.yaw_rate:.4f},{f.accel_long:.4f},{f.accel_lat:.4f}"
        )
    return "\n".join(lines) + "\n"
