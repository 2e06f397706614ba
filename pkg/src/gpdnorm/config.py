"""INI-style run configuration.

One section per command. Values are plain scalars or comma-separated lists::

    [simulate]
    xi0 = 0.25, 0.5, 0.75
    sigma0 = 1.0
    mu0 = 1.0
    sample_sizes = 25, 50, 100, 250, 500
    methods = pwm, zs, ml
    m = 1000
    mc_pvalue_reps = 10000
    seed = 2012

A run manifest is written in the same format, so it can be fed back with
``--config``.
"""

import configparser
import io

__all__ = ["ConfigError", "SCHEMA", "dump_section", "load_section", "resolve"]


class ConfigError(ValueError):
    pass


def _floats(s):
    return [float(v) for v in _items(s)]


def _ints(s):
    return [int(v) for v in _items(s)]


def _items(s):
    return [v.strip() for v in str(s).split(",") if v.strip()]


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s):
    s = str(s).strip()
    return None if s in ("", "none") else float(s)


def _opt_int(s):
    s = str(s).strip()
    return None if s in ("", "none") else int(s)


def _opt_str(s):
    s = str(s).strip()
    return None if s in ("", "none") else s


# key -> (parser, default); commands validate the keys they require
SCHEMA = {
    "simulate": {
        "xi0": (_floats, [0.25, 0.5, 0.75]),
        "sigma0": (float, 1.0),
        "mu0": (float, 1.0),
        "sample_sizes": (_ints, [25, 50, 100, 250, 500]),
        "methods": (_items, ["pwm", "zs", "ml"]),
        "m": (int, 1000),
        "mc_pvalue_reps": (int, 10_000),
        "keep_minimum": (_bool, False),
        "seed": (_opt_int, None),
    },
    "reject": {
        "xi0": (_floats, [0.2, 0.4, 0.6]),
        "sigma0": (float, 1.0),
        "mu0": (float, 1.0),
        "sample_sizes": (_ints, [15, 50, 100, 150, 250]),
        "method": (str, "zs"),
        "m": (int, 1000),
        "bootstrap_reps": (int, 1000),
        "keep_minimum": (_bool, False),
        "seed": (_opt_int, None),
    },
    "audit": {
        "input": (_opt_str, None),
        "m_target": (_opt_int, None),
    },
    "fit": {
        "prices": (_opt_str, None),
        "date_col": (str, "Date"),
        "price_col": (str, "Close"),
        "top_k": (_opt_int, None),
        "threshold": (_opt_float, None),
        "method": (str, "zs"),
        "boot_reps": (int, 1000),
        "confidence": (float, 0.95),
        "pp_out": (_opt_str, None),
        "seed": (_opt_int, None),
    },
    "normtest": {
        "input": (_opt_str, None),
        "column": (_opt_str, None),
        "theta0": (_opt_float, None),
        "mc_reps": (int, 10_000),
        "seed": (_opt_int, None),
    },
}


def load_section(path, command: str) -> dict:
    """Raw string values of ``[command]`` from ``path`` (missing section -> {})."""
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not cp.has_section(command):
        return {}
    raw = dict(cp.items(command))
    unknown = set(raw) - set(SCHEMA[command])
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) in [{command}]: {', '.join(sorted(unknown))}")
    return raw


def resolve(command: str, raw: dict, overrides: dict) -> dict:
    """Parse raw strings, apply non-None overrides, fill defaults."""
    out = {}
    for key, (parse, default) in SCHEMA[command].items():
        if overrides.get(key) is not None:
            out[key] = overrides[key]
        elif key in raw:
            try:
                out[key] = parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"[{command}] {key}: {exc}") from None
        else:
            out[key] = default
    return out


def _render(v):
    if isinstance(v, (list, tuple)):
        return ", ".join(_render(x) for x in v)
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def dump_section(command: str, values: dict) -> str:
    cp = configparser.ConfigParser()
    cp.add_section(command)
    for key in SCHEMA[command]:
        cp.set(command, key, _render(values.get(key)))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
