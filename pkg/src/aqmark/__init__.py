"""Stateless aggregate DiffServ markers (PAM, F-SAM) with TokenBucket and
TSW2CM baselines, and a packet-level dumbbell simulator to compare them."""
from importlib import resources

from .kernels import BACKEND
from .engine import Mark, Packet, PacketKind, Simulator, Link

__version__ = "0.1.0"


def scenario_path(name: str):
    """Path of a bundled golden scenario config, e.g. ``scenario_path("s2_udp_split")``."""
    return resources.files(__name__).joinpath("scenarios", name + ".yaml")


__all__ = ["BACKEND", "Mark", "Packet", "PacketKind", "Simulator", "Link", "scenario_path"]
