"""
Address-space resource: the virtual-to-physical page map and the attacker-view guard.
"""

import logging
from contextlib import contextmanager
from typing import Dict, Iterator, Set

import numpy as np

from ..exceptions import AddressError, ThreatModelError
from ..models.attack import MappingMode
from .base import BaseResource

logger = logging.getLogger(__name__)

# Virtual pages above this one alias physical frames on request.
ALIAS_BASE_VPN = 1 << 28


class AddressSpaceResource(BaseResource):
    """
    Page map of the attacker process.

    ``translate`` is the MMU: hardware uses it on every access and it is
    never counted. ``physical_of`` is the page-map query an attacker would
    make; it is counted and, with randomized pages, refused unless the
    view grants physical knowledge.
    """

    def __init__(self, sim):
        super().__init__(sim)
        self.view = self._config.attacker
        self.page_size = self.view.page_size
        self.knows_physical = self.view.knows_physical
        self.page_map_queries = 0
        self._frames = self._config.geometry.capacity // self.page_size
        self._page_map: Dict[int, int] = {}
        self._used_frames: Set[int] = set()
        self._rng = np.random.default_rng([self._config.seed, 1])

    @property
    def randomized(self) -> bool:
        return self.view.mapping_mode == MappingMode.RANDOMIZED.value

    def translate(self, va: int) -> int:
        """Physical address backing ``va``; assigns a frame on first touch."""
        if not self.randomized:
            if va >= self._config.geometry.capacity:
                raise AddressError(f"virtual address {va:#x} is not backed by memory", details={"va": va})
            return va
        vpn, offset = divmod(va, self.page_size)
        pfn = self._page_map.get(vpn)
        if pfn is None:
            pfn = self._assign_frame(vpn)
        return pfn * self.page_size + offset

    def _assign_frame(self, vpn: int) -> int:
        if len(self._used_frames) >= self._frames:
            raise AddressError("out of physical frames", details={"frames": self._frames})
        pfn = int(self._rng.integers(self._frames))
        while pfn in self._used_frames:
            pfn = (pfn + 1) % self._frames
        self._used_frames.add(pfn)
        self._page_map[vpn] = pfn
        return pfn

    def physical_of(self, va: int) -> int:
        """
        Page-map query.

        Raises:
            ThreatModelError: If pages are randomized and the view lacks physical knowledge
        """
        self.page_map_queries += 1
        self._require_knowledge("physical_of")
        return self.translate(va)

    def alias_physical(self, pa: int) -> int:
        """A virtual address mapped onto ``pa`` (privileged helper for calibration tools)."""
        self.page_map_queries += 1
        self._require_knowledge("alias_physical")
        self._sim.dram.map_physical(pa)
        if not self.randomized:
            return pa
        pfn, offset = divmod(pa, self.page_size)
        vpn = ALIAS_BASE_VPN + pfn
        self._page_map[vpn] = pfn
        self._used_frames.add(pfn)
        return vpn * self.page_size + offset

    def _require_knowledge(self, operation: str) -> None:
        if self.randomized and not self.knows_physical:
            raise ThreatModelError(
                f"{operation} needs the page map, which the attacker view does not grant",
                details={"mapping_mode": self.view.mapping_mode},
            )

    @contextmanager
    def calibration_mode(self) -> Iterator["AddressSpaceResource"]:
        """Temporarily grant physical knowledge."""
        previous = self.knows_physical
        self.knows_physical = True
        logger.debug("entering calibration mode")
        try:
            yield self
        finally:
            self.knows_physical = previous
