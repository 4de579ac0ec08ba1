"""
All the functions that make the other ones easier to use: seeded random
streams, small array helpers shared by several packages.
"""

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

WORKER_START_METHOD = "spawn"

# One stream per purpose, so toggling one feature does not shift unrelated draws.
STREAM_NAMES = ("assignment", "x_bar", "root", "targets", "near", "actions", "shuffle", "ps", "entropy")


@dataclass
class RandomStreams:
    """Independent generators split deterministically from one 64-bit seed."""
    seed: int
    assignment: np.random.Generator
    x_bar: np.random.Generator
    root: np.random.Generator
    targets: np.random.Generator
    near: np.random.Generator
    actions: np.random.Generator
    shuffle: np.random.Generator
    ps: np.random.Generator
    entropy: np.random.Generator


def make_streams(seed: int) -> RandomStreams:
    """
    Split a run seed into per-purpose generators.

    Args:
        seed (int): The run seed (any non-negative 64-bit integer).

    Returns:
        RandomStreams: one numpy Generator per purpose in STREAM_NAMES.
    """
    if seed < 0:
        raise ValueError(f"Seed must be non-negative, got {seed}.")
    generators = {
        name: np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
        for index, name in enumerate(STREAM_NAMES)
    }
    return RandomStreams(seed=seed, **generators)


def random_quaternion(rng: np.random.Generator) -> np.ndarray:
    """Uniform random unit quaternion (w, x, y, z), Shoemake's method."""
    u1, u2, u3 = rng.random(3)
    a = np.sqrt(1.0 - u1)
    b = np.sqrt(u1)
    quat = np.array([
        b * np.cos(2.0 * np.pi * u3),
        a * np.sin(2.0 * np.pi * u2),
        a * np.cos(2.0 * np.pi * u2),
        b * np.sin(2.0 * np.pi * u3),
    ])
    return quat / np.sqrt(np.sum(quat * quat))


def ordered_sum(values: np.ndarray, axis: int = 1) -> np.ndarray:
    """
    Sum along `axis` strictly left to right.

    np.sum may block the reduction differently depending on array shape; the
    simulator needs sums that do not depend on how many rollouts share a batch.
    """
    if values.shape[axis] == 0:
        shape = list(values.shape)
        del shape[axis]
        return np.zeros(shape)
    return np.take(np.add.accumulate(values, axis=axis), -1, axis=axis)


def map_ordered(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """
    fn over items, results in item order. workers > 1 uses a pool of spawned
    processes; fn must be importable and items picklable then.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    # no fork: the parent may already run jax threads
    context = multiprocessing.get_context(WORKER_START_METHOD)
    with ProcessPoolExecutor(max_workers=min(workers, len(items)), mp_context=context) as pool:
        return list(pool.map(fn, items))
