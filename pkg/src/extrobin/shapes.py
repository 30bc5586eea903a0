"""Shape identifiers and the plain-text geometry/config file format.

Shape ids are short strings used on the command line::

    disk | circle[:R]            circle (default R = 1)
    ellipse:aspect[:b]           semi-axes (aspect * b, b), b defaults to 1
    star:eps:m[:R]               r(t) = R (1 + eps cos(m t))
    stadium:length[:radius]      band-limited stadium
    disks:N[:r[:gap]]            N disjoint disks of radius r in a row
    sphere[:R]                   ball boundary in R^d
    spheroid:aspect[:b]          axial semi-axis aspect * b, equatorial b
    perturbed[:seed[:amplitude]] seeded convex perturbation of the unit sphere

Geometry files are line based.  ``#`` starts a comment, ``[kind name]``
opens a section, everything else is ``key = value``; lists are comma
separated.  Section kinds are ``run`` (option defaults for the command
line), ``curve``, ``multicurve`` (``components = name1, name2``) and
``body``.  Inside ``curve``/``body`` sections the key ``shape`` takes a shape
id, or ``kind = fourier`` with ``x_cos, x_sin, y_cos, y_sin`` lists, or
``kind = profile`` with ``z_cos, rho_sin`` lists and ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geometry
from .errors import DomainError, GeometryParseError

PLANAR = ("disk", "circle", "ellipse", "star", "stadium", "disks", "fourier")
SOLID = ("sphere", "spheroid", "perturbed", "profile")


def _numbers(parts, names, defaults):
    out = []
    for i, name in enumerate(names):
        if i < len(parts) and parts[i] != "":
            try:
                out.append(float(parts[i]))
            except ValueError:
                raise DomainError(f"{name} must be a number, got {parts[i]!r}") from None
        elif defaults[i] is None:
            raise DomainError(f"missing parameter {name!r}")
        else:
            out.append(defaults[i])
    if len(parts) > len(names):
        raise DomainError(f"too many parameters: {':'.join(parts)!r}")
    return out


def parse_shape(spec: str, d: int = 3, seed: int = 0):
    """Build a ``Curve2D``, ``MultiCurve2D`` or ``AxisymBody`` from a shape id."""
    head, *rest = spec.strip().split(":")
    head = head.lower()
    if head in ("disk", "circle"):
        (R,) = _numbers(rest, ["R"], [1.0])
        c = geometry.circle(R)
    elif head == "ellipse":
        aspect, b = _numbers(rest, ["aspect", "b"], [None, 1.0])
        c = geometry.ellipse(aspect * b, b)
    elif head == "star":
        eps, m, R = _numbers(rest, ["eps", "m", "R"], [None, None, 1.0])
        if m != int(m):
            raise DomainError("star needs an integer m")
        c = geometry.star(R, eps, int(m))
    elif head == "stadium":
        length, radius = _numbers(rest, ["length", "radius"], [None, 1.0])
        c = geometry.stadium(length, radius)
    elif head == "disks":
        n, r, gap = _numbers(rest, ["N", "r", "gap"], [None, 1.0, 1.0])
        if n != int(n) or n < 1:
            raise DomainError("disks needs a positive integer N")
        pitch = 2.0 * r + gap * r
        c = geometry.MultiCurve2D([geometry.circle(r, (i * pitch, 0.0)) for i in range(int(n))])
        c.name = spec
        return c
    elif head == "sphere":
        (R,) = _numbers(rest, ["R"], [1.0])
        c = geometry.sphere(R, d)
    elif head == "spheroid":
        aspect, b = _numbers(rest, ["aspect", "b"], [None, 1.0])
        c = geometry.spheroid(aspect * b, b, d)
    elif head == "perturbed":
        s, amp = _numbers(rest, ["seed", "amplitude"], [float(seed), 0.05])
        c = geometry.perturbed_sphere(int(s), amp, d=d)
    else:
        raise DomainError(f"unknown shape {head!r}")
    c.name = spec
    return c


def is_planar(shape) -> bool:
    return isinstance(shape, (geometry.Curve2D, geometry.MultiCurve2D))


def as_multicurve(shape) -> geometry.MultiCurve2D:
    if isinstance(shape, geometry.MultiCurve2D):
        return shape
    return geometry.MultiCurve2D([shape])


def average_perimeter(shape) -> float:
    mc = as_multicurve(shape)
    return mc.total_perimeter / len(mc)


def normalize_perimeter(shape, c: float):
    """Rescale so the average component perimeter equals ``c``."""
    if not c > 0:
        raise DomainError("perimeter must be positive")
    factor = c / average_perimeter(shape)
    name = getattr(shape, "name", "")
    if isinstance(shape, geometry.MultiCurve2D):
        out = geometry.MultiCurve2D([comp.scaled(factor) for comp in shape.components])
    else:
        out = shape.scaled(factor)
    out.name = name
    return out


def normalize_mean_curvature(body: geometry.AxisymBody, target: float = 1.0):
    """Rescale so the boundary average of ``M**(d-1)`` equals ``target``."""
    if not target > 0:
        raise DomainError("target must be positive")
    rep = geometry.axisym_curvatures(body)
    factor = (rep.M_total / target) ** (1.0 / (body.d - 1))
    out = body.scaled(factor)
    out.name = body.name
    return out


# -- files ---------------------------------------------------------------


@dataclass
class Section:
    kind: str
    name: str
    lineno: int
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)


@dataclass
class GeometryFile:
    run: dict = field(default_factory=dict)
    shapes: dict = field(default_factory=dict)

    def get(self, name):
        return self.shapes[name]


def _split_list(text):
    return [p.strip() for p in text.split(",") if p.strip()]


def _float_list(section, key):
    try:
        return [float(v) for v in _split_list(section.values[key])]
    except KeyError:
        raise GeometryParseError(f"section [{section.kind} {section.name}] needs {key!r}", section.lineno) from None
    except ValueError:
        raise GeometryParseError(f"{key!r} must be a list of numbers", section.lines[key]) from None


def parse_sections(text: str):
    sections = []
    run = Section("run", "", 0)
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise GeometryParseError("unterminated section header", lineno)
            parts = line[1:-1].split()
            if not parts:
                raise GeometryParseError("empty section header", lineno)
            kind = parts[0].lower()
            if kind == "run":
                if len(parts) != 1:
                    raise GeometryParseError("[run] takes no name", lineno)
                current = run
                continue
            if kind not in ("curve", "multicurve", "body"):
                raise GeometryParseError(f"unknown section kind {kind!r}", lineno)
            if len(parts) != 2:
                raise GeometryParseError(f"[{kind}] needs exactly one name", lineno)
            current = Section(kind, parts[1], lineno)
            sections.append(current)
            continue
        if "=" not in line:
            raise GeometryParseError(f"expected 'key = value', got {line!r}", lineno)
        if current is None:
            raise GeometryParseError("key outside of any section", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise GeometryParseError("empty key", lineno)
        if key in current.values:
            raise GeometryParseError(f"duplicate key {key!r}", lineno)
        current.values[key] = value
        current.lines[key] = lineno
    return run, sections


def _build(section, built, seed):
    v = section.values
    where = section.lineno
    try:
        if section.kind == "multicurve":
            names = _split_list(v.get("components", ""))
            if not names:
                raise GeometryParseError("multicurve needs 'components'", where)
            comps = []
            for n in names:
                if n not in built or not isinstance(built[n], geometry.Curve2D):
                    raise GeometryParseError(f"unknown curve {n!r}", section.lines["components"])
                comps.append(built[n])
            return geometry.MultiCurve2D(comps)
        d = int(v.get("d", 3))
        if "shape" in v:
            shape = parse_shape(v["shape"], d=d, seed=seed)
            if (section.kind == "curve") != is_planar(shape):
                raise GeometryParseError(f"shape {v['shape']!r} does not fit a [{section.kind}] section",
                                         section.lines["shape"])
            return shape
        kind = v.get("kind", "").lower()
        if section.kind == "curve" and kind == "fourier":
            lists = [_float_list(section, k) for k in ("x_cos", "x_sin", "y_cos", "y_sin")]
            return geometry.Curve2D(*lists, name=section.name)
        if section.kind == "body" and kind == "profile":
            return geometry.AxisymBody(d, _float_list(section, "z_cos"), _float_list(section, "rho_sin"),
                                       name=section.name)
        raise GeometryParseError(f"section needs 'shape' or a supported 'kind', got {kind!r}", where)
    except GeometryParseError:
        raise
    except (ValueError, DomainError) as exc:
        raise GeometryParseError(str(exc), where) from exc


def load_geometry(text: str, seed: int = 0) -> GeometryFile:
    run, sections = parse_sections(text)
    built = {}
    for sec in sections:
        if sec.name in built:
            raise GeometryParseError(f"duplicate shape name {sec.name!r}", sec.lineno)
        shape = _build(sec, built, seed)
        shape.name = sec.name
        built[sec.name] = shape
    return GeometryFile(dict(run.values), built)


def read_geometry_file(path, seed: int = 0) -> GeometryFile:
    with open(path, encoding="utf-8") as fh:
        return load_geometry(fh.read(), seed)


def resolve_shape(spec: str, library: GeometryFile | None = None, d: int = 3, seed: int = 0):
    """Look ``spec`` up in a loaded file first, then parse it as a shape id."""
    if library is not None and spec in library.shapes:
        return library.shapes[spec]
    return parse_shape(spec, d=d, seed=seed)


def shape_label(shape) -> str:
    return getattr(shape, "name", "") or type(shape).__name__


def equal_perimeter_radius(c: float) -> float:
    return c / (2.0 * math.pi)
