"""Floorplan JSON and SVG emission"""
import base64
import io
import json
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from ..errors import FormatError
from ..preprocess import IMAGE_SIZE, ImageTransform
from .extract import Floorplan
from .geometry import RoomPolygon


def _loop(values) -> list:
    return [[float(x), float(y)] for x, y in values]


def floorplan_to_dict(floorplan: Floorplan) -> dict:
    rooms = []
    tr = floorplan.transform
    for room in floorplan.rooms:
        entry = {"id": room.room_id, "slot": room.slot,
                 "outer": _loop(room.outer), "holes": [_loop(h) for h in room.holes]}
        if tr is not None:
            entry["outer_world"] = _loop(tr.normalized_to_world(room.outer))
            entry["holes_world"] = [_loop(tr.normalized_to_world(h)) for h in room.holes]
        rooms.append(entry)
    return {"rooms": rooms, "transform": tr.to_dict() if tr is not None else None}


def floorplan_from_dict(data: dict) -> Floorplan:
    try:
        rooms = [RoomPolygon(r["outer"], r.get("holes", []), int(r["id"]), r.get("slot"))
                 for r in data["rooms"]]
    except (KeyError, TypeError) as e:
        raise FormatError(f"Malformed floorplan: {e}")
    transform = data.get("transform")
    return Floorplan(rooms, ImageTransform.from_dict(transform) if transform else None)


def floorplan_to_json(floorplan: Floorplan, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(floorplan_to_dict(floorplan), indent=2, sort_keys=True))
    return path


def floorplan_from_json(path) -> Floorplan:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path} is not valid JSON: {e}")
    return floorplan_from_dict(data)


def room_color(room_id: int, seed: int = 0) -> str:
    r, g, b = np.random.default_rng([seed, room_id]).integers(64, 230, size=3)
    return f"#{r:02x}{g:02x}{b:02x}"


def _path(room: RoomPolygon, size: int) -> str:
    parts = []
    for loop in [room.outer] + room.holes:
        pts = loop * size
        parts.append("M " + " L ".join(f"{x:.3f} {y:.3f}" for x, y in pts) + " Z")
    return " ".join(parts)


def floorplan_to_svg(floorplan: Floorplan,
                     path=None,
                     size: int = IMAGE_SIZE,
                     seed: int = 0,
                     underlay: Optional[np.ndarray] = None) -> str:
    """One filled path per room over an optional grayscale density underlay"""
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    if underlay is not None:
        pixels = np.round(np.clip(underlay, 0, 1) * 255).astype(np.uint8)
        buffer = io.BytesIO()
        Image.fromarray(pixels).resize((size, size)).save(buffer, format="PNG")
        encoded = base64.b64encode(buffer.getvalue()).decode("ascii")
        lines.append(f'<image width="{size}" height="{size}" href="data:image/png;base64,{encoded}"/>')
    for room in floorplan.rooms:
        lines.append(f'<path id="room-{room.room_id}" d="{_path(room, size)}" fill="{room_color(room.room_id, seed)}" '
                     f'fill-opacity="0.6" fill-rule="evenodd" stroke="#000000" stroke-width="1.5"/>')
    lines.append("</svg>")
    svg = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(svg)
    return svg
