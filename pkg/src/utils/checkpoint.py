import json
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..errors import FormatError
from ..ndgrad import Array2

BIN_NAME = "params.bin"
MANIFEST_NAME = "params.json"


def save_parameters(params: Mapping[str, object], directory, metadata: Optional[dict] = None) -> Path:
    """
    Flat list of named arrays in one little-endian float64 file; the JSON
    manifest records name, shape and byte offset of each array.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    with open(directory / BIN_NAME, "wb") as f:
        for name in params:
            value = params[name]
            arr = value.value if isinstance(value, Array2) else np.asarray(value)
            blob = np.ascontiguousarray(arr, dtype="<f8").tobytes()
            f.write(blob)
            entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
            offset += len(blob)
    manifest = {"dtype": "<f8", "arrays": entries, "metadata": metadata or {}}
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return directory / BIN_NAME


def load_parameters(directory) -> Tuple[Dict[str, np.ndarray], dict]:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST_NAME).read_text())
        raw = (directory / BIN_NAME).read_bytes()
    except FileNotFoundError as e:
        raise FormatError(f"Checkpoint incomplete in {directory}: {e}")
    arrays = {}
    for entry in manifest["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype=manifest.get("dtype", "<f8"), count=count, offset=entry["offset"])
        arrays[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return arrays, manifest.get("metadata", {})
