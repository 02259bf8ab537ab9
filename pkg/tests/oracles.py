"""Independent reimplementations used as test oracles.

These deliberately use different data structures and control flow from the
library paths they check.
"""

import numpy as np

from retroplan.reactions import Side


def brute_force_center(rxn):
    """Diff map-keyed bond/attribute tables built from scratch."""
    r_atoms = {}
    flat = 0
    for mol in rxn.reactants:
        for i, atom in enumerate(mol.atoms):
            if atom.map_number is not None:
                r_atoms[atom.map_number] = (atom.element, atom.charge,
                                            atom.hydrogens, flat + i)
        flat += len(mol.atoms)
    p_atoms = {
        a.map_number: (a.element, a.charge, a.hydrogens, i)
        for i, a in enumerate(rxn.product.atoms)
        if a.map_number is not None
    }

    def bond_table(mols):
        table = {}
        for mol in mols:
            for bond in mol.bonds:
                ma = mol.atoms[bond.a].map_number
                mb = mol.atoms[bond.b].map_number
                if ma is not None and mb is not None:
                    table[frozenset((ma, mb))] = bond.order.value
        return table

    r_bonds = bond_table(list(rxn.reactants))
    p_bonds = bond_table([rxn.product])
    changed = set()
    for pair in set(r_bonds) | set(p_bonds):
        if r_bonds.get(pair) != p_bonds.get(pair):
            changed.update(pair)
    for m in set(r_atoms) & set(p_atoms):
        if r_atoms[m][:3] != p_atoms[m][:3]:
            changed.add(m)

    center = set()
    for m in changed:
        if m in r_atoms and m in p_atoms:
            center.add((Side.REACTANT, r_atoms[m][3]))
            center.add((Side.PRODUCT, p_atoms[m][3]))
    for m in r_atoms:
        if m not in p_atoms:
            center.add((Side.REACTANT, r_atoms[m][3]))
    for m in p_atoms:
        if m not in r_atoms:
            center.add((Side.PRODUCT, p_atoms[m][3]))
    for i, atom in enumerate(rxn.product.atoms):
        if atom.map_number is None:
            center.add((Side.PRODUCT, i))
    return frozenset(center)


def roc_oracle(scores, labels):
    """Pairwise enumeration with half credit for ties."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else (0.5 if p == n else 0.0)
    return total / (len(pos) * len(neg))


def pr_oracle(scores, labels):
    """Exhaustive distinct-threshold sweep."""
    n_pos = sum(labels)
    thresholds = sorted(set(scores), reverse=True)
    area = 0.0
    prev_recall = 0.0
    for t in thresholds:
        tp = sum(1 for s, y in zip(scores, labels) if s >= t and y)
        fp = sum(1 for s, y in zip(scores, labels) if s >= t and not y)
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def calibration_oracle(samples, target, grid_points=101):
    """Exhaustive triple loop over the documented grid and tie rules.

    Returns (thr_classifier, thr_prior, precision, recall) or None when no
    grid point reaches the target.
    """
    s_cls = [b.classifier_score for b, _ in samples]
    s_pri = [b.prior_score for b, _ in samples]
    grid_c = np.linspace(min(s_cls), max(s_cls), grid_points)
    grid_p = np.linspace(min(s_pri), max(s_pri), grid_points)
    total_pos = sum(y for _, y in samples)
    best = None
    for gc in range(grid_points):
        for gp in range(grid_points):
            tp = fp = 0
            for b, y in samples:
                pred = (b.classifier_score > grid_c[gc]
                        and b.prior_score > grid_p[gp]
                        and b.reference_count > 0)
                if pred and y:
                    tp += 1
                elif pred:
                    fp += 1
            if tp + fp == 0:
                continue
            precision = tp / (tp + fp)
            recall = tp / total_pos
            if precision < target:
                continue
            key = (-recall, -precision, gc, gp)
            if best is None or key < best[0]:
                best = (key, float(grid_c[gc]), float(grid_p[gp]),
                        precision, recall)
    if best is None:
        return None
    return best[1:]
