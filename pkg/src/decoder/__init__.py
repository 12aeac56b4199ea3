"""Room-wise implicit decoder: line banks, convex grouping and shape assembly"""
from .assembly import (assemble_min, assemble_sum, axis_mask, effective_selection, group_convex,
                       signed_distances)
from .config import AXIS_ONLY, FULL, STAGES, DecoderConfig, check_stage
from .lines import LineBank, QuerySet
from .model import DecodedRooms, RoomDecoder, decode_room, occupancy_grid, predict_lines
