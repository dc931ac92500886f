"""
Domain loader for the lattice experiments.

Reads lattice domains from the "rect WxH" shorthand, inline JSON, or a JSON
file, with validation of the site list.
"""

import json
import re
from pathlib import Path
from typing import Any, List, Union

from loguru import logger

from .domain import MAX_SITES, LatticeDomain, Site

RECT_PATTERN = re.compile(r"^rect\s+(\d+)\s*x\s*(\d+)$", re.IGNORECASE)


def parse_site(text: str) -> Site:
    """Parse "x,y" into a site."""
    parts = [p.strip() for p in text.strip().strip("()").split(",")]
    if len(parts) != 2:
        raise ValueError(f"Invalid site format: {text!r} (expected 'x,y')")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"Invalid site format: {text!r} (coordinates must be integers)")


def parse_site_list(text: str) -> List[Site]:
    """Parse "x,y; x,y; ..." into a list of sites."""
    return [parse_site(chunk) for chunk in text.split(";") if chunk.strip()]


class DomainLoader:
    """
    Loads lattice domains from text descriptions.

    Accepted forms are "rect WxH", a JSON list of [x, y] pairs, a JSON object
    with a "sites" list (and optional "name"), or a path to a .json file
    holding either JSON form.
    """

    def __init__(self, max_sites: int = MAX_SITES):
        """
        Initialize DomainLoader.

        Args:
            max_sites: Largest accepted domain
        """
        if not 1 <= max_sites <= MAX_SITES:
            raise ValueError(f"max_sites must be in [1, {MAX_SITES}], got {max_sites}")
        self.max_sites = max_sites

    def _validate_sites(self, raw: Any) -> List[Site]:
        """
        Validate a decoded site list.

        Raises:
            ValueError: If the list is empty, malformed or too large
        """
        if not isinstance(raw, list) or not raw:
            raise ValueError("sites must be a non-empty list of [x, y] pairs")
        sites = []
        for item in raw:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ValueError(f"Invalid site entry: {item!r}")
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in item):
                raise ValueError(f"Site coordinates must be integers: {item!r}")
            sites.append((item[0], item[1]))
        if len(set(sites)) > self.max_sites:
            raise ValueError(f"sites: {len(set(sites))} sites exceed the limit of {self.max_sites}")
        return sites

    def _from_json(self, payload: Any, default_name: str) -> LatticeDomain:
        if isinstance(payload, dict):
            name = str(payload.get("name", default_name))
            sites = self._validate_sites(payload.get("sites"))
        else:
            name = default_name
            sites = self._validate_sites(payload)
        return LatticeDomain(tuple(sites), name=name)

    def load(self, source: Union[str, Path]) -> LatticeDomain:
        """
        Load a domain from a description.

        Args:
            source: "rect WxH", inline JSON, or a path to a JSON file

        Returns:
            LatticeDomain

        Raises:
            ValueError: If the description cannot be parsed
            OSError: If a referenced file cannot be read
        """
        if isinstance(source, Path) or (isinstance(source, str) and source.strip().endswith(".json")):
            path = Path(source)
            try:
                payload = json.loads(path.read_text(encoding="utf-8"))
            except OSError as e:
                raise OSError(f"Cannot read domain file {path}: {e}") from e
            except json.JSONDecodeError as e:
                raise ValueError(f"Invalid JSON in domain file {path}: {e}") from e
            domain = self._from_json(payload, path.stem)
        else:
            text = source.strip() if isinstance(source, str) else ""
            if not text:
                raise ValueError("Domain description must be a non-empty string")
            match = RECT_PATTERN.match(text)
            if match:
                width, height = int(match.group(1)), int(match.group(2))
                if width * height > self.max_sites:
                    raise ValueError(
                        f"domain: rect {width}x{height} exceeds the limit of {self.max_sites} sites")
                domain = LatticeDomain.rect(width, height)
            else:
                try:
                    payload = json.loads(text)
                except json.JSONDecodeError:
                    raise ValueError(f"Invalid domain description: {text!r}")
                domain = self._from_json(payload, "domain")

        logger.debug(f"Loaded domain {domain.name} with {len(domain)} sites "
                     f"({len(domain.boundary_sites())} on the boundary)")
        return domain
