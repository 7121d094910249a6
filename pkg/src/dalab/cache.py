"""Content-addressed on-disk cache for task results.

Keys hash the canonical JSON of the object description together with the
package version.  Each entry stores its key material, which is compared on
read, so a hash collision or a damaged file falls back to recomputation.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path

from . import __version__
from .serialize import canonical_json

log = logging.getLogger(__name__)

ENV_VAR = "DALAB_CACHE"


def cache_key(description, version: str = __version__) -> str:
    material = canonical_json({"object": description, "version": version})
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class ResultCache:
    def __init__(self, root: str | os.PathLike | None, version: str = __version__):
        self.root = Path(root) if root else None
        self.version = version
        self.hits = 0
        self.misses = 0
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def _material(self, description) -> str:
        return canonical_json({"object": description, "version": self.version})

    def _file(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, description):
        if self.root is None:
            return None
        key = cache_key(description, self.version)
        f = self._file(key)
        if not f.exists():
            return None
        try:
            entry = json.loads(f.read_text(encoding="utf-8"))
            if entry["key_material"] != self._material(description):
                log.warning("cache entry %s does not match its key; recomputing", key[:12])
                return None
            payload = entry["payload"]
        except (OSError, ValueError, KeyError, TypeError):
            log.warning("cache entry %s is corrupt; recomputing", key[:12])
            return None
        self.hits += 1
        return payload

    def put(self, description, payload):
        if self.root is None:
            return
        key = cache_key(description, self.version)
        entry = {"key_material": self._material(description), "payload": payload}
        tmp = self._file(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(entry, sort_keys=True), encoding="utf-8")
        tmp.replace(self._file(key))

    def fetch(self, description, compute):
        """Cached payload for ``description``, computing and storing on a miss.

        Payloads always pass through a JSON round trip, so cold and warm runs
        hand identical objects to the caller.
        """
        hit = self.get(description)
        if hit is not None:
            return hit
        self.misses += 1
        payload = json.loads(json.dumps(compute()))
        self.put(description, payload)
        return payload
