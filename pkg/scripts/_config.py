"""Dataclass configs from ``--field value`` command-line overrides."""

import argparse
import dataclasses
import json
import typing


def config_from_argv(cls, argv=None):
    """Build ``cls`` from its defaults, overriding any field given as ``--field VALUE`` (JSON or plain text)."""
    parser = argparse.ArgumentParser(description=cls.__doc__)
    hints = typing.get_type_hints(cls)
    for f in dataclasses.fields(cls):
        parser.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                            help=f"{hints[f.name]} (default {f.default if f.default is not dataclasses.MISSING else f.default_factory()})")
    ns = parser.parse_args(argv)
    overrides = {}
    for name, raw in vars(ns).items():
        if raw is None:
            continue
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        overrides[name] = tuple(tuple(v) if isinstance(v, list) else v for v in value) if isinstance(value, list) else value
    return cls(**overrides)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
