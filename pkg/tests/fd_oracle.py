"""Extended-precision cost evaluation used as a finite-difference reference.

Written directly from the bilinear form over the transition tensor, not via
the kl module's residual vector, and in long double so that central
differences with step 1e-6 are not limited by cancellation.
"""

import numpy as np

from picodes.kl import transition_tensor

LD = np.longdouble


class LongCost:
    def __init__(self, par):
        self.par = par
        p = par.params
        self.ql, self.N = p.q_l, p.dim
        self.T = transition_tensor(p.n, p.q_p, p.t)
        self.basis = par.basis.toarray()
        self.complex = np.iscomplexobj(self.basis)
        self.offset = par.offset.astype(LD)
        self.vals = self.T.values.astype(LD)

    def table(self, x):
        x = np.asarray(x, dtype=LD)
        if self.complex:
            re = self.offset + self.basis.real.astype(LD) @ x
            im = self.basis.imag.astype(LD) @ x
        else:
            re = self.offset + self.basis.astype(LD) @ x
            im = np.zeros_like(re)
        return re.reshape(self.ql, self.N), im.reshape(self.ql, self.N)

    def cost(self, x):
        re, im = self.table(x)
        ql, T = self.ql, self.T
        total = LD(0)
        for i in range(ql):
            for j in range(i, ql):
                gr = (re[i] * re[j] + im[i] * im[j]).sum() - (1 if i == j else 0)
                gi = (re[i] * im[j] - im[i] * re[j]).sum()
                total += gr * gr + gi * gi
        P2 = T.n_pairs
        G_re = np.zeros((ql, ql, P2), dtype=LD)
        G_im = np.zeros((ql, ql, P2), dtype=LD)
        for i in range(ql):
            for j in range(ql):
                # conj(a_i[src]) a_j[dst] * value
                ar, ai = re[i][T.src], im[i][T.src]
                br, bi = re[j][T.dst], im[j][T.dst]
                np.add.at(G_re[i, j], T.pair, (ar * br + ai * bi) * self.vals)
                np.add.at(G_im[i, j], T.pair, (ar * bi - ai * br) * self.vals)
        for i in range(ql):
            for j in range(i + 1, ql):
                total += (G_re[i, j] ** 2 + G_im[i, j] ** 2).sum()
            for j in range(i):
                dr = G_re[i, i] - G_re[j, j]
                di = G_im[i, i] - G_im[j, j]
                total += (dr**2 + di**2).sum()
        return total

    def fd_gradient(self, x, h=1e-6):
        x = np.asarray(x, dtype=LD)
        g = np.zeros(len(x), dtype=LD)
        for k in range(len(x)):
            e = np.zeros(len(x), dtype=LD)
            e[k] = h
            g[k] = (self.cost(x + e) - self.cost(x - e)) / (2 * LD(h))
        return g.astype(float)
