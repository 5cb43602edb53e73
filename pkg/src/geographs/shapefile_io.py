"""Reader and writer for ESRI shapefile triplets (.shp/.shx/.dbf).

Only Null (0), Point (1) and PolyLine (3) shapes are written. The Z and M
variants of Point/PolyLine are read with the extra ordinates dropped.
"""

from __future__ import annotations

import logging
import math
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .errors import DbfError, ShapefileError, UnsupportedShapeType
from .geo_model import Feature, FeatureCollection, Field, FieldSchema, GeoPoint, PolyLine

log = logging.getLogger(__name__)

FILE_CODE = 9994
VERSION = 1000
NULL, POINT, POLYLINE = 0, 1, 3
POINTZ, POLYLINEZ, POINTM, POLYLINEM = 11, 13, 21, 23
_BASE_TYPE = {POINT: POINT, POLYLINE: POLYLINE, POINTZ: POINT, POINTM: POINT,
              POLYLINEZ: POLYLINE, POLYLINEM: POLYLINE}
_KIND_TYPE = {"point": POINT, "polyline": POLYLINE}

DBF_VERSION = 0x03
# fixed header date keeps output byte-reproducible
DBF_DATE = (95, 7, 26)


@dataclass(frozen=True)
class ShapefileTriplet:
    shp: bytes
    shx: bytes
    dbf: bytes

    @classmethod
    def from_stem(cls, stem: str | os.PathLike) -> "ShapefileTriplet":
        base = _strip_ext(stem)
        parts = []
        for ext in (".shp", ".shx", ".dbf"):
            path = _sibling(base, ext)
            try:
                parts.append(path.read_bytes())
            except FileNotFoundError:
                raise ShapefileError(f"{path}: file not found") from None
        return cls(*parts)

    def write(self, stem: str | os.PathLike) -> None:
        base = _strip_ext(stem)
        for ext, data in ((".shp", self.shp), (".shx", self.shx), (".dbf", self.dbf)):
            atomic_write(base.with_name(base.name + ext), data)


def _strip_ext(stem) -> Path:
    p = Path(stem)
    if p.suffix.lower() in (".shp", ".shx", ".dbf"):
        p = p.with_suffix("")
    return p


def _sibling(base: Path, ext: str) -> Path:
    candidate = base.with_name(base.name + ext)
    if not candidate.exists():
        upper = base.with_name(base.name + ext.upper())
        if upper.exists():
            return upper
    return candidate


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- DBF

def _field_type_code(f: Field) -> bytes:
    if f.kind == "text":
        return b"C"
    if f.kind == "logical":
        return b"L"
    if f.kind == "real" and f.decimals == 0:
        return b"F"
    return b"N"


def read_dbf_schema(dbf: bytes) -> FieldSchema:
    return _read_dbf_header(dbf)[0]


def _read_dbf_header(dbf: bytes) -> tuple[FieldSchema, int, int, int]:
    if len(dbf) < 33:
        raise DbfError("DBF file truncated in header")
    if dbf[0] != DBF_VERSION:
        raise DbfError(f"unsupported DBF version byte 0x{dbf[0]:02x}")
    nrec, header_len, record_len = struct.unpack("<IHH", dbf[4:12])
    fields = []
    pos = 32
    while True:
        if pos >= len(dbf):
            raise DbfError("DBF field descriptors not terminated")
        if dbf[pos] == 0x0D:
            break
        desc = dbf[pos:pos + 32]
        if len(desc) < 32:
            raise DbfError("DBF field descriptor truncated")
        raw_name = desc[:11].split(b"\x00", 1)[0]
        name = raw_name.decode("ascii", errors="replace").strip()
        code = chr(desc[11])
        width, decimals = desc[16], desc[17]
        if code == "C":
            kind, decimals = "text", 0
        elif code == "L":
            kind, decimals = "logical", 0
        elif code == "N":
            kind = "integer" if decimals == 0 else "real"
        elif code == "F":
            kind = "real"
        else:
            raise DbfError(f"unknown DBF field type {code!r} for field {name!r}")
        if kind == "real" and decimals > max(width - 2, 0):
            decimals = max(width - 2, 0)
        try:
            fields.append(Field(name, kind, width, decimals))
        except Exception as exc:
            raise DbfError(f"bad DBF field descriptor {name!r}: {exc}") from None
        pos += 32
    expected = 32 + 32 * len(fields) + 1
    if header_len != expected:
        raise DbfError(
            f"DBF header length {header_len} inconsistent with "
            f"{len(fields)} fields (expected {expected})")
    if record_len != 1 + sum(f.width for f in fields):
        raise DbfError(f"DBF record length {record_len} does not match field widths")
    try:
        schema = FieldSchema(fields)
    except Exception as exc:
        raise DbfError(str(exc)) from None
    return schema, nrec, header_len, record_len


def _decode_text(raw: bytes) -> str:
    if not raw.isascii():
        warnings.warn("DBF text contains non-ASCII bytes; passed through undecoded",
                      stacklevel=3)
    return raw.decode("utf-8", errors="surrogateescape")


def _parse_value(raw: bytes, f: Field) -> Any:
    if f.kind == "text":
        text = raw.rstrip(b" \x00")
        return _decode_text(text) if text else None
    text = raw.strip(b" \x00").decode("ascii", errors="replace")
    if f.kind == "logical":
        if text in ("T", "t", "Y", "y"):
            return True
        if text in ("F", "f", "N", "n"):
            return False
        return None
    if not text or set(text) <= {"*"}:
        return None
    try:
        if f.kind == "integer":
            try:
                return int(text)
            except ValueError:
                value = float(text)
                if not value.is_integer():
                    raise
                return int(value)
        return float(text)
    except ValueError:
        raise DbfError(f"field {f.name}: cannot parse {text!r} as {f.kind}") from None


def format_value(value: Any, f: Field) -> bytes:
    """Fixed-width DBF cell for ``value``; raises if it does not fit."""
    if value is None:
        return (b"?" if f.kind == "logical" else b" " * f.width)
    if f.kind == "text":
        if not value.isascii():
            warnings.warn(f"field {f.name}: non-ASCII text written as UTF-8 bytes",
                          stacklevel=3)
        raw = value.encode("utf-8", errors="surrogateescape")
        if len(raw) > f.width:
            raise DbfError(
                f"field {f.name}: value {value!r} exceeds width {f.width}")
        return raw.ljust(f.width, b" ")
    if f.kind == "logical":
        return b"T" if value else b"F"
    if f.kind == "integer":
        text = str(int(value))
    else:
        value = float(value)
        if not math.isfinite(value):
            raise DbfError(f"field {f.name}: non-finite value {value!r}")
        text = f"{value:.{f.decimals}f}"
    if len(text) > f.width:
        raise DbfError(f"field {f.name}: value {value!r} exceeds width {f.width}")
    return text.rjust(f.width).encode("ascii")


def dbf_formatted(value: Any, f: Field) -> Any:
    """The value a write/read cycle through ``f`` yields."""
    return _parse_value(format_value(value, f), f)


def write_dbf(schema: FieldSchema, rows: Iterable[Iterable[Any]]) -> bytes:
    if not len(schema):
        raise DbfError("DBF needs at least one field")
    rows = list(rows)
    header_len = 32 + 32 * len(schema) + 1
    record_len = 1 + sum(f.width for f in schema)
    out = bytearray(struct.pack("<B3BIHH20x", DBF_VERSION, *DBF_DATE,
                                len(rows), header_len, record_len))
    for f in schema:
        name = f.name.encode("ascii").ljust(11, b"\x00")
        out += struct.pack("<11sc4xBB14x", name, _field_type_code(f),
                           f.width, f.decimals)
    out += b"\x0D"
    for row in rows:
        out += b" "
        for value, f in zip(row, schema):
            out += format_value(value, f)
    out += b"\x1A"
    return bytes(out)


def read_dbf(dbf: bytes) -> tuple[FieldSchema, list[tuple[Any, ...]]]:
    schema, nrec, header_len, record_len = _read_dbf_header(dbf)
    if len(dbf) < header_len + nrec * record_len:
        raise DbfError(f"DBF truncated: {nrec} records declared")
    rows = []
    for r in range(nrec):
        pos = header_len + r * record_len + 1
        values = []
        for f in schema:
            values.append(_parse_value(dbf[pos:pos + f.width], f))
            pos += f.width
        rows.append(tuple(values))
    return schema, rows


# ---------------------------------------------------------------- SHP

def _header(shape_type: int, file_words: int, bbox) -> bytes:
    return (struct.pack(">7i", FILE_CODE, 0, 0, 0, 0, 0, file_words)
            + struct.pack("<2i4d4d", VERSION, shape_type, *bbox, 0.0, 0.0, 0.0, 0.0))


def _encode_shape(geom, shape_type: int) -> bytes:
    if geom is None:
        return struct.pack("<i", NULL)
    if shape_type == POINT:
        return struct.pack("<i2d", POINT, geom.x, geom.y)
    parts = geom.parts
    offsets, n = [], 0
    for part in parts:
        offsets.append(n)
        n += len(part)
    flat = [c for part in parts for pt in part for c in pt]
    return (struct.pack("<i4d2i", POLYLINE, *geom.bbox, len(parts), n)
            + struct.pack(f"<{len(parts)}i", *offsets)
            + struct.pack(f"<{2 * n}d", *flat))


def _collection_bbox(c: FeatureCollection) -> tuple[float, float, float, float]:
    xs, ys = [], []
    for feat in c.features:
        g = feat.geometry
        if g is None:
            continue
        if isinstance(g, GeoPoint):
            xs.append(g.x)
            ys.append(g.y)
        else:
            xs += (g.bbox[0], g.bbox[2])
            ys += (g.bbox[1], g.bbox[3])
    if not xs:
        return (0.0, 0.0, 0.0, 0.0)
    return (min(xs), min(ys), max(xs), max(ys))


def write_shapefile(c: FeatureCollection, stem: str | os.PathLike | None = None
                    ) -> ShapefileTriplet:
    """Encode ``c``; if ``stem`` is given also write the three files atomically."""
    shape_type = _KIND_TYPE[c.geometry_kind]
    dbf = write_dbf(c.schema, (f.attributes for f in c.features))
    records = bytearray()
    index = bytearray()
    offset_words = 50
    for num, feat in enumerate(c.features, start=1):
        content = _encode_shape(feat.geometry, shape_type)
        words = len(content) // 2
        records += struct.pack(">2i", num, words) + content
        index += struct.pack(">2i", offset_words, words)
        offset_words += 4 + words
    bbox = _collection_bbox(c)
    shp = _header(shape_type, offset_words, bbox) + bytes(records)
    shx = _header(shape_type, 50 + 4 * len(c.features), bbox) + bytes(index)
    triplet = ShapefileTriplet(shp, shx, dbf)
    if stem is not None:
        triplet.write(stem)
    return triplet


def _check_header(data: bytes, what: str) -> int:
    if len(data) < 100:
        raise ShapefileError(f"{what} header truncated")
    code = struct.unpack(">i", data[0:4])[0]
    if code != FILE_CODE:
        raise ShapefileError(f"{what}: bad file code {code} (expected {FILE_CODE})")
    version, shape_type = struct.unpack("<2i", data[28:36])
    if version != VERSION:
        raise ShapefileError(f"{what}: bad version {version} (expected {VERSION})")
    return shape_type


def _decode_shape(content: bytes, header_type: int, recnum: int):
    if len(content) < 4:
        raise ShapefileError(f"record {recnum}: truncated")
    stype = struct.unpack("<i", content[:4])[0]
    if stype == NULL:
        return None, False
    if stype != header_type:
        raise ShapefileError(
            f"record {recnum}: shape type {stype} conflicts with header type {header_type}")
    base = _BASE_TYPE[stype]
    dropped = stype != base
    try:
        if base == POINT:
            x, y = struct.unpack("<2d", content[4:20])
            return GeoPoint(x, y), dropped
        nparts, npoints = struct.unpack("<2i", content[36:44])
        if nparts < 1 or npoints < 0:
            raise ShapefileError(f"record {recnum}: bad part/point counts")
        offsets = list(struct.unpack(f"<{nparts}i", content[44:44 + 4 * nparts]))
        start = 44 + 4 * nparts
        flat = struct.unpack(f"<{2 * npoints}d", content[start:start + 16 * npoints])
    except struct.error:
        raise ShapefileError(f"record {recnum}: truncated") from None
    pts = list(zip(flat[0::2], flat[1::2]))
    bounds = offsets + [npoints]
    if any(b < a for a, b in zip(bounds, bounds[1:])) or offsets[0] != 0:
        raise ShapefileError(f"record {recnum}: bad part offsets")
    parts = [pts[a:b] for a, b in zip(bounds, bounds[1:])]
    return PolyLine(parts), dropped


def read_shapefile(source: ShapefileTriplet | str | os.PathLike,
                   mode: str = "planar") -> FeatureCollection:
    """Decode a triplet (or the files sharing ``source`` as stem)."""
    t = source if isinstance(source, ShapefileTriplet) else ShapefileTriplet.from_stem(source)
    header_type = _check_header(t.shp, ".shp")
    _check_header(t.shx, ".shx")
    if header_type not in _BASE_TYPE and header_type != NULL:
        raise UnsupportedShapeType(header_type)
    schema, rows = read_dbf(t.dbf)
    nindex = (len(t.shx) - 100) // 8
    if nindex != len(rows):
        raise ShapefileError(
            f".dbf has {len(rows)} records but .shx indexes {nindex}")
    file_words = struct.unpack(">i", t.shp[24:28])[0]
    if file_words * 2 != len(t.shp):
        log.warning(".shp header length %d words, file has %d bytes",
                    file_words, len(t.shp))
    geoms = []
    dropped_any = False
    pos = 100
    for k in range(nindex):
        offset, words = struct.unpack(">2i", t.shx[100 + 8 * k:108 + 8 * k])
        if offset * 2 != pos:
            raise ShapefileError(
                f"record {k + 1}: .shx offset {offset * 2} does not match .shp position {pos}")
        if pos + 8 > len(t.shp):
            raise ShapefileError(f"record {k + 1}: truncated")
        _, length = struct.unpack(">2i", t.shp[pos:pos + 8])
        if length != words:
            raise ShapefileError(f"record {k + 1}: .shx length disagrees with .shp")
        content = t.shp[pos + 8:pos + 8 + 2 * length]
        if len(content) < 2 * length:
            raise ShapefileError(f"record {k + 1}: truncated")
        geom, dropped = _decode_shape(content, header_type, k + 1)
        dropped_any |= dropped
        geoms.append(geom)
        pos += 8 + 2 * length
    if dropped_any:
        warnings.warn(f"shape type {header_type}: Z/M ordinates discarded", stacklevel=2)
    kind = "point" if _BASE_TYPE.get(header_type) == POINT else "polyline"
    features = [Feature(g, row) for g, row in zip(geoms, rows)]
    return FeatureCollection(schema, kind, features, mode=mode)
