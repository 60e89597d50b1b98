import numpy as np
import pytest

from blockergm import MultilevelGraph, empty_graph, uniform_partition


def build_graph(sizes, edges=(), directed=False, attrs=None):
    """Small-graph builder: edges as (k, i, j) index triples."""
    partition = [(f"n{k}", [f"n{k}.{i}" for i in range(s)])
                 for k, s in enumerate(sizes)]
    adjacency = [np.zeros((s, s), dtype=np.uint8) for s in sizes]
    for k, i, j in edges:
        adjacency[k][i, j] = 1
        if not directed:
            adjacency[k][j, i] = 1
    node_attributes = None
    if attrs is not None:
        node_attributes = {}
        for k, s in enumerate(sizes):
            for i in range(s):
                node_attributes[f"n{k}.{i}"] = dict(attrs[k][i])
    return MultilevelGraph(directed, partition, adjacency,
                           node_attributes=node_attributes)


def triangle():
    return build_graph([3], [(0, 0, 1), (0, 0, 2), (0, 1, 2)])


@pytest.fixture
def two_block_graph():
    # block 0: path 0-1-2-3, block 1: triangle plus isolate
    return build_graph([4, 4],
                       [(0, 0, 1), (0, 1, 2), (0, 2, 3),
                        (1, 0, 1), (1, 0, 2), (1, 1, 2)])


@pytest.fixture
def empty_two_block():
    return empty_graph(uniform_partition(2, 4))
