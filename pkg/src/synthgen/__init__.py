"""Deterministic synthetic floorplans, wall point clouds and GT occupancy"""
from .layout import SceneSpec, cut_corner, place_rectangles, room_outlines
from .scene import SynthScene, gen_corpus, gen_occupancy, gen_scene, load_scene, write_scene
