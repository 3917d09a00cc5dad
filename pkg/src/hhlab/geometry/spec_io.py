"""JSON domain descriptions."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from hhlab.errors import InvalidInputError
from hhlab.geometry.bodies import Ball, EllipsoidBody, Polygon2, PolytopeH
from hhlab.geometry.planar import Annulus2, StarDomain2


def domain_from_spec(spec: dict):
    try:
        kind = spec["type"]
        if kind == "polygon2":
            return Polygon2(np.asarray(spec["vertices"], float))
        if kind == "polytope_h":
            hs = spec["halfspaces"]
            return PolytopeH(int(spec["dim"]), [h["normal"] for h in hs], [h["offset"] for h in hs])
        if kind == "ellipsoid":
            return EllipsoidBody(spec["center"], spec["semi_axes"], spec.get("frame"))
        if kind == "ball":
            return Ball(spec["center"], spec["radius"])
        if kind == "star2":
            return StarDomain2(spec["center"], spec["radial"])
        if kind == "annulus2":
            return Annulus2(spec["r_inner"], spec["r_outer"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed domain spec: {exc!r}") from exc
    raise InvalidInputError(f"unknown domain type {spec.get('type')!r}")


def domain_to_spec(domain) -> dict:
    return domain.to_spec()


def load_domain(path):
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read domain spec {path}: {exc}") from exc
    return domain_from_spec(spec)
