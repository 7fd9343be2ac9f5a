#pragma once

// Occupation-number combinatorics shared by the Fock sectors and the symmetric
// tensor calculus.
//
// An occupation tuple nu = (nu_1,...,nu_d) with sum n labels the orthonormal basis
// vector |nu> of the n-fold symmetric tensor power of C^d. Tuples are ordered
// lexicographically with the first mode heaviest and descending, so sector n starts
// at (n,0,...,0) and ends at (0,...,0,n). The coordinates of the symmetric power
// z^{(x)n} in this basis are the monomials m_nu(z) = sqrt(n!/prod nu_i!) prod z_i^nu_i.
//
// The split isometry Lambda_{a,b} : Sym^{a+b} -> Sym^a (x) Sym^b has coefficients
// <alpha (x) beta | nu> = sqrt(prod_i C(nu_i,alpha_i) / C(n,a)), alpha+beta = nu.
// It satisfies Lambda^dagger Lambda = Id and is the workhorse for contractions and
// partial traces.

#include "mflab/common.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace mflab {

using Occ = std::vector<int>;  // occupation tuple, length = number of modes

inline std::int64_t binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// n (n-1) ... (n-k+1) as a wide integer; exact for every desk-scale argument.
inline __int128 falling(std::int64_t n, int k) {
    __int128 r = 1;
    for (int i = 0; i < k; ++i) r *= (n - i);
    return r;
}

inline int occ_sum(const Occ& nu) { return std::accumulate(nu.begin(), nu.end(), 0); }

// Basis of one symmetric sector: all occupation tuples of d modes summing to n.
class OccBasis {
  public:
    OccBasis() = default;
    OccBasis(int d, int n) : d_(d), n_(n) {
        if (d < 1 || n < 0) throw std::invalid_argument("OccBasis: need d >= 1, n >= 0");
        Occ cur(d, 0);
        gen(cur, 0, n);
        for (int i = 0; i < static_cast<int>(tuples_.size()); ++i) index_[tuples_[i]] = i;
    }

    int modes() const { return d_; }
    int particles() const { return n_; }
    int dim() const { return static_cast<int>(tuples_.size()); }
    const Occ& at(int i) const { return tuples_[static_cast<size_t>(i)]; }

    int index(const Occ& nu) const {
        auto it = index_.find(nu);
        if (it == index_.end()) throw std::invalid_argument("OccBasis: tuple not in sector");
        return it->second;
    }
    bool contains(const Occ& nu) const { return index_.find(nu) != index_.end(); }

    // sqrt(n!/prod nu_i!) prod z_i^nu_i for each basis tuple; the coordinates of z^{(x)n}.
    Vec monomials(const Vec& z) const {
        if (z.size() != d_) throw std::invalid_argument("OccBasis: mode count mismatch");
        Vec out(dim());
        for (int i = 0; i < dim(); ++i) {
            const Occ& nu = at(i);
            cxd m = std::sqrt(static_cast<double>(multinomial(nu)));
            for (int j = 0; j < d_; ++j)
                for (int r = 0; r < nu[j]; ++r) m *= z[j];
            out[i] = m;
        }
        return out;
    }

    // d/dz_j of the monomial vector, evaluated at z.
    Vec monomials_dz(const Vec& z, int j) const {
        Vec out = Vec::Zero(dim());
        for (int i = 0; i < dim(); ++i) {
            const Occ& nu = at(i);
            if (nu[j] == 0) continue;
            cxd m = std::sqrt(static_cast<double>(multinomial(nu))) * static_cast<double>(nu[j]);
            for (int r = 0; r < nu[j] - 1; ++r) m *= z[j];
            for (int l = 0; l < d_; ++l) {
                if (l == j) continue;
                for (int r = 0; r < nu[l]; ++r) m *= z[l];
            }
            out[i] = m;
        }
        return out;
    }

    // n! / prod nu_i!, exact.
    static std::int64_t multinomial(const Occ& nu) {
        std::int64_t r = 1;
        int seen = 0;
        for (int x : nu) {
            for (int i = 1; i <= x; ++i) r = r * (seen + i) / i;
            seen += x;
        }
        return r;
    }

  private:
    void gen(Occ& cur, int pos, int left) {
        if (pos == d_ - 1) {
            cur[pos] = left;
            tuples_.push_back(cur);
            return;
        }
        for (int c = left; c >= 0; --c) {  // heaviest first, descending
            cur[pos] = c;
            gen(cur, pos + 1, left - c);
        }
    }

    int d_ = 0, n_ = 0;
    std::vector<Occ> tuples_;
    std::map<Occ, int> index_;
};

inline Occ occ_add(const Occ& a, const Occ& b) {
    Occ r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

inline Occ occ_sub(const Occ& a, const Occ& b) {
    Occ r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

inline bool occ_le(const Occ& a, const Occ& b) {  // a <= b componentwise
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return false;
    return true;
}

// Split isometry Lambda_{a,b}: rows indexed by (alpha,beta) pairs flattened as
// alpha_index * dim(Sym^b) + beta_index, columns by Sym^{a+b} tuples.
inline RMat split_isometry(const OccBasis& full, const OccBasis& left, const OccBasis& right) {
    if (left.modes() != full.modes() || right.modes() != full.modes())
        throw std::invalid_argument("split_isometry: mode counts differ");
    if (left.particles() + right.particles() != full.particles())
        throw std::invalid_argument("split_isometry: particle counts do not add up");
    const int d = full.modes();
    RMat L = RMat::Zero(static_cast<Eigen::Index>(left.dim()) * right.dim(), full.dim());
    const double denom = static_cast<double>(binom(full.particles(), left.particles()));
    for (int c = 0; c < full.dim(); ++c) {
        const Occ& nu = full.at(c);
        for (int ia = 0; ia < left.dim(); ++ia) {
            const Occ& alpha = left.at(ia);
            if (!occ_le(alpha, nu)) continue;
            Occ beta = occ_sub(nu, alpha);
            double num = 1.0;
            for (int j = 0; j < d; ++j) num *= static_cast<double>(binom(nu[j], alpha[j]));
            L(static_cast<Eigen::Index>(ia) * right.dim() + right.index(beta), c) =
                std::sqrt(num / denom);
        }
    }
    return L;
}

// Isometric embedding of Sym^p(C^d) into the full tensor power (C^d)^{(x)p},
// columns = symmetric basis vectors in the product basis (row index encodes the
// tuple (i_1..i_p) base d, i_1 most significant). Intended for small p and d.
inline RMat sym_embedding(const OccBasis& basis) {
    const int d = basis.modes(), p = basis.particles();
    Eigen::Index rows = 1;
    for (int i = 0; i < p; ++i) {
        rows *= d;
        if (rows > (1 << 22)) throw std::invalid_argument("sym_embedding: tensor space too large");
    }
    RMat E = RMat::Zero(rows, basis.dim());
    std::vector<int> idx(static_cast<size_t>(p), 0);
    for (Eigen::Index r = 0; r < rows; ++r) {
        Occ nu(static_cast<size_t>(d), 0);
        for (int s = 0; s < p; ++s) ++nu[static_cast<size_t>(idx[static_cast<size_t>(s)])];
        // <e_I | nu> = sqrt(prod nu_i! / p!)
        double v = 1.0;
        for (int j = 0; j < d; ++j)
            for (int i = 1; i <= nu[static_cast<size_t>(j)]; ++i) v *= i;
        for (int i = 1; i <= p; ++i) v /= i;
        E(r, basis.index(nu)) = std::sqrt(v);
        for (int s = p - 1; s >= 0; --s) {  // increment mixed-radix tuple
            if (++idx[static_cast<size_t>(s)] < d) break;
            idx[static_cast<size_t>(s)] = 0;
        }
    }
    return E;
}

}  // namespace mflab
