"""Trained rooms to closed polygons and the assembled floorplan"""
from .extract import (Floorplan, discretize_selection, extract_floorplan, grid_agreement,
                      room_geometry, room_star)
from .geometry import RoomPolygon, halfplane_intersect, signed_area, simplify_loop, union_polygons
from .io import (floorplan_from_dict, floorplan_from_json, floorplan_to_dict, floorplan_to_json,
                 floorplan_to_svg, room_color)
