#!/usr/bin/env python3
"""Writes cache.json, the expected cache for fixture_registry.json."""

import json
import pathlib

here = pathlib.Path(__file__).resolve().parent
fixture = json.loads((here / "fixture_registry.json").read_text())
out = {}
for img in fixture["images"]:
    l_meta = [{"layer": l["digest"], "size": l["size"]} for l in img["layers"]]
    out[f'{img["name"]}:{img["tag"]}'] = {
        "id": img["config"],
        "l_meta": l_meta,
        "name": img["name"],
        "name_without_repo": img["name"].split("/", 1)[1] if "/" in img["name"] and any(
            c in img["name"].split("/", 1)[0] for c in ".:") else img["name"],
        "tag": img["tag"],
        "total_size": sum(l["size"] for l in img["layers"]),
    }
(here / "cache.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
