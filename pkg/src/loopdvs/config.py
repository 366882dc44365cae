"""Flat-key configuration files with ``[link]``, ``[receiver]`` and ``[events.N]`` sections.

Keys are the field names of :class:`LinkSpec`, :class:`ReceiverSpec` and
:class:`VibrationEvent`, all values in SI units.  ``span_lengths_m`` is a
comma-separated list (``none`` for a single span covering the loop).
"""
from __future__ import annotations

import configparser
import dataclasses
import io
import logging
import re

from .errors import ConfigError
from .link import Config, LinkSpec, ReceiverSpec, VibrationEvent, validate

log = logging.getLogger(__name__)

_EVENT_SECTION = re.compile(r"^events\.(\d+)$")


def _fields(cls):
    return {f.name: f for f in dataclasses.fields(cls)}


def _parse_float(section, key, text, errors):
    try:
        return float(text)
    except ValueError:
        errors.append(f"[{section}] {key}: not a number: {text!r}")
        return None


def _parse_section(cls, section, items, errors, strict):
    known = _fields(cls)
    values = {}
    for key, text in items:
        if key not in known:
            msg = f"[{section}] unknown key {key!r}"
            if strict:
                errors.append(msg)
            else:
                log.warning(msg)
            continue
        if key == "span_lengths_m":
            if text.strip().lower() in ("", "none"):
                values[key] = None
            else:
                parts = [_parse_float(section, key, p, errors) for p in text.split(",")]
                values[key] = tuple(parts) if None not in parts else None
        else:
            v = _parse_float(section, key, text, errors)
            if v is not None:
                values[key] = v
    return values


def loads(text, strict=True, validate_config=True):
    """Parse configuration text into a :class:`Config`.

    Unknown sections or keys raise :class:`ConfigError` in strict mode and
    are logged as warnings otherwise.
    """
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed configuration: {exc}"]) from exc

    errors = []
    link_kw, rx_kw, events = {}, {}, []
    for section in parser.sections():
        items = parser.items(section)
        m = _EVENT_SECTION.match(section)
        if section == "link":
            link_kw = _parse_section(LinkSpec, section, items, errors, strict)
        elif section == "receiver":
            rx_kw = _parse_section(ReceiverSpec, section, items, errors, strict)
        elif m:
            kw = _parse_section(VibrationEvent, section, items, errors, strict)
            events.append((int(m.group(1)), VibrationEvent(**kw)))
        else:
            msg = f"unknown section [{section}]"
            if strict:
                errors.append(msg)
            else:
                log.warning(msg)
    if errors:
        raise ConfigError(errors)

    events.sort(key=lambda pair: pair[0])
    link = LinkSpec(**link_kw)
    receiver = ReceiverSpec(**rx_kw)
    evs = tuple(ev for _, ev in events)
    if validate_config:
        return validate(link, receiver, evs)
    return Config(link=link, receiver=receiver, events=evs)


def default_config():
    """The built-in scenario: 1008 km loop with one near-end 1 kHz vibration."""
    return validate(LinkSpec(), ReceiverSpec(), (VibrationEvent(),))


def load(path, strict=True):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), strict=strict)


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return repr(float(value))


def dumps(config: Config) -> str:
    """Serialize ``config``; ``loads(dumps(c))`` reproduces every field exactly."""
    out = io.StringIO()
    blocks = [("link", config.link), ("receiver", config.receiver)]
    blocks += [(f"events.{i}", ev) for i, ev in enumerate(config.events)]
    for name, obj in blocks:
        out.write(f"[{name}]\n")
        for f in dataclasses.fields(obj):
            out.write(f"{f.name} = {_format(getattr(obj, f.name))}\n")
        out.write("\n")
    return out.getvalue()


def dump(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(config))
