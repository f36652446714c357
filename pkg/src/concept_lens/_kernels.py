"""Compiled inner loops for object grouping.

All kernels walk per-thread event windows through ``order``/``pos`` (see
``Trace.thread_order`` and ``Trace.thread_pos``) so that a template
activation's slice never touches other threads' events.

Activations must be pre-sorted by template object; members are emitted at
most once per template object (``seen`` stamps), which makes the output the
already-unified (template object, member) relation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ENTRY = 0
EXIT = 1


@njit(cache=True, nogil=True)
def _grow(buf, n):
    if n < buf.shape[0]:
        return buf
    out = np.empty(buf.shape[0] * 2 + 16, dtype=buf.dtype)
    out[: buf.shape[0]] = buf
    return out


@njit(cache=True, nogil=True)
def rewind_self_calls(acts, link, self_call):
    """Replace each self-call activation by its nearest non-self-call ancestor."""
    out = np.empty_like(acts)
    for k in range(acts.shape[0]):
        e = acts[k]
        while self_call[e]:
            e = link[e]
        out[k] = e
    return out


@njit(cache=True, nogil=True)
def chain_scan(acts, tobj_rank, kind, method, obj, match, self_call, order, pos,
               chain, name_match, include_start, exclude_template, n_objects):
    """Chain traversal seeds for a batch of activations.

    Returns (template_rank, member) pairs.  ``chain[m]`` says whether method
    code ``m`` may appear on the stack of a template/hook chain;
    ``name_match[m]`` whether the initial callee is included.
    """
    seen = np.full(n_objects, -1, dtype=np.int64)
    out_t = np.empty(64, dtype=np.int64)
    out_m = np.empty(64, dtype=np.int64)
    n_out = 0
    depth_flags = np.empty(64, dtype=np.int8)
    for k in range(acts.shape[0]):
        e = acts[k]
        r = tobj_rank[k]
        t_obj = obj[e]
        if include_start and name_match[method[e]]:
            if seen[t_obj] != r:
                seen[t_obj] = r
                out_t = _grow(out_t, n_out)
                out_m = _grow(out_m, n_out)
                out_t[n_out] = r
                out_m[n_out] = t_obj
                n_out += 1
        x = match[e]
        j0 = pos[e] + 1
        j1 = pos[x]
        depth = 0
        bad = 0
        for j in range(j0, j1 + 1):
            i = order[j]
            kd = kind[i]
            if kd == ENTRY:
                flag = 0
                if not self_call[i] and not chain[method[i]]:
                    flag = 1
                if depth >= depth_flags.shape[0]:
                    depth_flags = _grow(depth_flags, depth)
                depth_flags[depth] = flag
                depth += 1
                bad += flag
                if bad == 0:
                    o = obj[i]
                    if exclude_template and o == t_obj:
                        continue
                    if seen[o] != r:
                        seen[o] = r
                        out_t = _grow(out_t, n_out)
                        out_m = _grow(out_m, n_out)
                        out_t[n_out] = r
                        out_m[n_out] = o
                        n_out += 1
            elif kd == EXIT:
                if depth > 0:
                    depth -= 1
                    bad -= depth_flags[depth]
    return out_t[:n_out], out_m[:n_out]


@njit(cache=True, nogil=True)
def direct_scan(acts, tobj_rank, kind, method, obj, link, match, order, pos, hook_pair, n_objects):
    """Connection seeds: callees of hook messages sent by the template object."""
    seen = np.full(n_objects, -1, dtype=np.int64)
    out_t = np.empty(64, dtype=np.int64)
    out_m = np.empty(64, dtype=np.int64)
    n_out = 0
    for k in range(acts.shape[0]):
        e = acts[k]
        r = tobj_rank[k]
        t_obj = obj[e]
        x = match[e]
        j0 = pos[e] + 1
        j1 = pos[x]
        for j in range(j0, j1 + 1):
            i = order[j]
            if kind[i] != ENTRY or not hook_pair[method[i]]:
                continue
            par = link[i]
            if par < 0 or obj[par] != t_obj:
                continue
            o = obj[i]
            if seen[o] != r:
                seen[o] = r
                out_t = _grow(out_t, n_out)
                out_m = _grow(out_m, n_out)
                out_t[n_out] = r
                out_m[n_out] = o
                n_out += 1
    return out_t[:n_out], out_m[:n_out]



@njit(cache=True, nogil=True)
def keep_self_calls_local(self_entries, link, obj, routed, member_keys, n_objects):
    """Route a self-call to its caller's lifeline when that lifeline holds the object.

    ``self_entries`` must be in trace order so callers are final before callees;
    ``member_keys`` is the sorted array of ``lifeline * n_objects + object``.
    """
    for k in range(self_entries.shape[0]):
        e = self_entries[k]
        li = routed[link[e]]
        if li < 0:
            continue
        key = li * n_objects + obj[e]
        j = np.searchsorted(member_keys, key)
        if j < member_keys.shape[0] and member_keys[j] == key:
            routed[e] = li
