"""Numba kernels for the particle engine hot paths.

All kernels are single-threaded and deterministic; random draws consume
the caller's bit-generator state in slot order.
"""

from __future__ import annotations

import math

from numba import njit


@njit(cache=True)
def diffuse_slots(gen, positions, bound, sigma_free, sigma_bound):
    """Displace every enzyme slot by i.i.d. Gaussian steps, three draws per
    slot in slot order."""
    n = positions.shape[0]
    for i in range(n):
        s = sigma_bound if bound[i] else sigma_free
        positions[i, 0] += s * gen.standard_normal()
        positions[i, 1] += s * gen.standard_normal()
        positions[i, 2] += s * gen.standard_normal()


@njit(cache=True)
def reflect_slots(positions, bound, lower, upper, decomposed):
    """Fold slots that left the box back inside by specular reflection
    (repeated for multiple crossings). Records indices of bound slots that
    were outside into ``decomposed``; returns how many.
    """
    n = positions.shape[0]
    count = 0
    for i in range(n):
        outside = False
        for d in range(3):
            p = positions[i, d]
            if p < lower[d] or p > upper[d]:
                outside = True
                span = upper[d] - lower[d]
                y = (p - lower[d]) % (2.0 * span)
                if y > span:
                    y = 2.0 * span - y
                positions[i, d] = lower[d] + y
        if outside and bound[i]:
            decomposed[count] = i
            count += 1
    return count


@njit(cache=True)
def build_cell_lists(positions, skip, lower, inv_cell, nx, ny, nz, head, next_index):
    """Bucket non-skipped slots into grid cells as linked lists.

    head[cell] is the last inserted slot, next_index chains earlier ones;
    positions are assumed inside the box (indices are clamped for safety).
    """
    head[:] = -1
    n = positions.shape[0]
    for i in range(n):
        if skip[i]:
            continue
        cx = int((positions[i, 0] - lower[0]) * inv_cell[0])
        cy = int((positions[i, 1] - lower[1]) * inv_cell[1])
        cz = int((positions[i, 2] - lower[2]) * inv_cell[2])
        if cx < 0:
            cx = 0
        elif cx >= nx:
            cx = nx - 1
        if cy < 0:
            cy = 0
        elif cy >= ny:
            cy = ny - 1
        if cz < 0:
            cz = 0
        elif cz >= nz:
            cz = nz - 1
        cell = (cx * ny + cy) * nz + cz
        next_index[i] = head[cell]
        head[cell] = i


@njit(cache=True)
def find_binding_pairs(
    a_positions,
    slot_positions,
    lower,
    inv_cell,
    nx,
    ny,
    nz,
    head,
    next_index,
    radius_sq,
    pair_a,
    pair_slot,
    pair_dist_sq,
):
    """Collect all (A, free-E) pairs closer than the binding radius,
    searching the A's cell and its 26 neighbors.

    Returns the number of pairs found; if it exceeds the output capacity the
    surplus is counted but not stored and the caller must retry with larger
    buffers.
    """
    capacity = pair_a.shape[0]
    count = 0
    for ai in range(a_positions.shape[0]):
        cx = int(math.floor((a_positions[ai, 0] - lower[0]) * inv_cell[0]))
        cy = int(math.floor((a_positions[ai, 1] - lower[1]) * inv_cell[1]))
        cz = int(math.floor((a_positions[ai, 2] - lower[2]) * inv_cell[2]))
        for gx in range(cx - 1, cx + 2):
            if gx < 0 or gx >= nx:
                continue
            for gy in range(cy - 1, cy + 2):
                if gy < 0 or gy >= ny:
                    continue
                for gz in range(cz - 1, cz + 2):
                    if gz < 0 or gz >= nz:
                        continue
                    j = head[(gx * ny + gy) * nz + gz]
                    while j >= 0:
                        dx = a_positions[ai, 0] - slot_positions[j, 0]
                        dy = a_positions[ai, 1] - slot_positions[j, 1]
                        dz = a_positions[ai, 2] - slot_positions[j, 2]
                        d2 = dx * dx + dy * dy + dz * dz
                        if d2 < radius_sq:
                            if count < capacity:
                                pair_a[count] = ai
                                pair_slot[count] = j
                                pair_dist_sq[count] = d2
                            count += 1
                        j = next_index[j]
    return count
