"""Convex bodies, planar test domains and geometric operations."""
from hhlab.geometry.base import BoundarySamples, Domain, sphere_rule
from hhlab.geometry.bodies import (
    Ball,
    ConvexBody,
    EllipsoidBody,
    Polygon2,
    PolytopeH,
    ellipsoid_projection_area,
    random_polygon,
    random_polytope,
    regular_polygon,
    triangle_family,
    unit_square,
    wedge_family,
)
from hhlab.geometry.ops import (
    FlatnessScale,
    SchwarzProfile,
    boundary_centroid,
    boundary_density,
    cauchy_surface_area,
    centroid,
    chord_through,
    flatness_scale,
    inradius,
    schwarz_profile,
    surface_measure,
    volume,
    width,
)
from hhlab.geometry.planar import Annulus2, StarDomain2, notched_disk, star_from_fourier
from hhlab.geometry.spec_io import domain_from_spec, domain_to_spec, load_domain

__all__ = [
    "Annulus2", "Ball", "BoundarySamples", "ConvexBody", "Domain", "EllipsoidBody",
    "FlatnessScale", "Polygon2", "PolytopeH", "SchwarzProfile", "StarDomain2",
    "boundary_centroid", "boundary_density", "cauchy_surface_area", "centroid",
    "chord_through", "domain_from_spec", "domain_to_spec", "ellipsoid_projection_area",
    "flatness_scale", "inradius", "load_domain", "notched_disk", "random_polygon",
    "random_polytope", "regular_polygon", "schwarz_profile", "sphere_rule",
    "star_from_fourier", "surface_measure", "triangle_family", "unit_square", "volume",
    "wedge_family", "width",
]
