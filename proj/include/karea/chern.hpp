#pragma once

// Lattice Chern-Weil evaluation. On surfaces the c1 density of a plaquette is
// tr log(holonomy) / (2 pi i). On 4-manifolds the curvature 2-form of each
// hypercube is the clover average of its four parallel plaquette logs per
// coordinate plane, transported to the cube's first corner; c1^2 and c2 are
// the wedge products of that form.

#include "karea/bundle.hpp"

#include <iomanip>
#include <sstream>

#include <cctype>
#include <map>
#include <string>
#include <vector>

namespace karea {

struct ChernReport {
	int dim = 0;
	/// densities[monomial][cell]
	std::map<std::string, std::vector<double>> densities;
	std::map<std::string, double> totals;
	/// distance of each total from the nearest integer
	std::map<std::string, double> residuals;

	double total(const std::string &mono) const
	{
		auto it = totals.find(mono);
		require(it != totals.end(), ErrorKind::config, "no Chern monomial '" + mono + "' in this dimension");
		return it->second;
	}
	double max_abs_total() const
	{
		double x = 0.0;
		for (auto &[k, v] : totals)
			x = std::max(x, std::abs(v));
		return x;
	}
};

inline std::vector<std::string> chern_basis(int dim)
{
	if (dim == 2)
		return {"c1"};
	if (dim == 4)
		return {"c1^2", "c2"};
	return {};
}

namespace detail {

/// Hermitian curvature components Omega[mu][nu] (mu < nu) of a hypercube,
/// normalised so that a plaquette contributes log(holonomy) / (2 pi i).
inline std::array<std::array<Mat, 4>, 4> clover_forms(const Bundle &b, int cell, double guard)
{
	const Mesh &m = *b.base;
	const auto &c = m.corners[4][cell];
	const int r = b.rank;
	// transport from corner 0 to corner x along axes in increasing order
	std::array<Mat, 16> to_corner;
	to_corner[0] = identity(r);
	for (int x = 1; x < 16; ++x) {
		int hi = 31 - std::countl_zero(static_cast<unsigned>(x));
		int prev = x ^ (1 << hi);
		to_corner[x] = b.along(m.edge_step(c[prev], c[x])) * to_corner[prev];
	}
	std::array<std::array<Mat, 4>, 4> omega;
	const cplx scale(0.0, -1.0 / two_pi);
	for (int mu = 0; mu < 4; ++mu)
		for (int nu = mu + 1; nu < 4; ++nu) {
			Mat acc = Mat::Zero(r, r);
			int others[2], k = 0;
			for (int a = 0; a < 4; ++a)
				if (a != mu && a != nu)
					others[k++] = a;
			for (int s = 0; s < 4; ++s) {
				int x0 = ((s & 1) << others[0]) | ((s >> 1 & 1) << others[1]);
				int x1 = x0 | 1 << mu, x3 = x0 | 1 << nu, x2 = x1 | 1 << nu;
				Mat hol = b.along(m.edge_step(c[x3], c[x0])) * b.along(m.edge_step(c[x2], c[x3])) *
				          b.along(m.edge_step(c[x1], c[x2])) * b.along(m.edge_step(c[x0], c[x1]));
				int p = m.find_cell(2, {c[x0], c[x1], c[x2], c[x3]});
				Mat l = log_unitary(hol, p, guard);
				acc += to_corner[x0].adjoint() * l * to_corner[x0];
			}
			omega[mu][nu] = herm_part(scale * acc * 0.25);
		}
	return omega;
}

} // namespace detail

inline ChernReport chern_densities(const Bundle &b, double guard = branch_cut_guard)
{
	const Mesh &m = *b.base;
	ChernReport rep;
	rep.dim = m.dim;
	if (m.dim == 2) {
		auto &d = rep.densities["c1"];
		d.assign(m.num_plaquettes(), 0.0);
		parallel_for(m.num_plaquettes(), [&](int p) { d[p] = (log_unitary(b.holonomy(p), p, guard).trace() / cplx(0.0, two_pi)).real(); });
	} else if (m.dim == 4) {
		auto &d11 = rep.densities["c1^2"];
		auto &d2 = rep.densities["c2"];
		const int nc = m.num_top();
		d11.assign(nc, 0.0);
		d2.assign(nc, 0.0);
		parallel_for(nc, [&](int c) {
			auto w = detail::clover_forms(b, c, guard);
			auto t = [&](int a, int bb) { return w[a][bb].trace().real(); };
			auto tt = [&](int a, int bb, int cc, int dd) { return (w[a][bb] * w[cc][dd]).trace().real(); };
			double c11 = 2.0 * (t(0, 1) * t(2, 3) - t(0, 2) * t(1, 3) + t(0, 3) * t(1, 2));
			double trww = 2.0 * (tt(0, 1, 2, 3) - tt(0, 2, 1, 3) + tt(0, 3, 1, 2));
			d11[c] = c11;
			d2[c] = 0.5 * (c11 - trww);
		});
	} else {
		fail(ErrorKind::unsupported, "Chern densities are implemented for dimensions 2 and 4");
	}
	for (auto &[k, d] : rep.densities) {
		double s = compensated_sum(d);
		rep.totals[k] = s;
		rep.residuals[k] = std::abs(s - std::round(s));
	}
	return rep;
}

/// Rational combination of the basis monomials c1 (dim 2) or c1^2, c2 (dim 4).
struct ChernPolynomial {
	int dim = 0; // 0 for the zero polynomial
	std::map<std::string, double> terms;

	static ChernPolynomial parse(const std::string &text);
	std::string str() const;
};

inline ChernPolynomial ChernPolynomial::parse(const std::string &text)
{
	std::string s;
	for (char ch : text)
		if (!std::isspace(static_cast<unsigned char>(ch)))
			s += ch;
	require(!s.empty(), ErrorKind::config, "empty Chern polynomial");
	ChernPolynomial poly;
	std::size_t i = 0;
	auto number = [&]() {
		std::size_t j = i;
		while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.'))
			++j;
		require(j > i, ErrorKind::config, "expected a number in Chern polynomial '" + text + "'");
		double v = std::stod(s.substr(i, j - i));
		i = j;
		return v;
	};
	bool first = true;
	while (i < s.size()) {
		double sign = 1.0;
		if (s[i] == '+' || s[i] == '-') {
			sign = s[i] == '-' ? -1.0 : 1.0;
			++i;
		} else {
			require(first, ErrorKind::config, "expected '+' or '-' in Chern polynomial '" + text + "'");
		}
		first = false;
		double coef = 1.0;
		bool have_coef = false;
		if (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
			coef = number();
			have_coef = true;
			if (i < s.size() && s[i] == '/') {
				++i;
				double den = number();
				require(den != 0.0, ErrorKind::config, "zero denominator in Chern polynomial");
				coef /= den;
			}
			if (i < s.size() && s[i] == '*')
				++i;
		}
		if (i >= s.size() || s[i] == '+' || s[i] == '-') {
			require(have_coef && coef == 0.0, ErrorKind::config, "constant terms are not Chern monomials");
			continue;
		}
		std::string mono;
		if (s.compare(i, 4, "c1^2") == 0) {
			mono = "c1^2";
			i += 4;
		} else if (s.compare(i, 5, "c1*c1") == 0) {
			mono = "c1^2";
			i += 5;
		} else if (s.compare(i, 2, "c1") == 0) {
			mono = "c1";
			i += 2;
		} else if (s.compare(i, 2, "c2") == 0) {
			mono = "c2";
			i += 2;
		} else {
			fail(ErrorKind::config, "unknown Chern monomial in '" + text + "'");
		}
		int d = mono == "c1" ? 2 : 4;
		require(poly.dim == 0 || poly.dim == d, ErrorKind::config, "Chern polynomial mixes degrees");
		poly.dim = d;
		poly.terms[mono] += sign * coef;
	}
	return poly;
}

inline std::string ChernPolynomial::str() const
{
	if (terms.empty())
		return "0";
	std::string out;
	for (auto &[k, v] : terms) {
		if (!out.empty())
			out += v < 0 ? " - " : " + ";
		else if (v < 0)
			out += "-";
		double a = std::abs(v);
		if (a != 1.0) {
			std::ostringstream num;
			num << std::setprecision(12) << a;
			out += num.str() + " ";
		}
		out += k;
	}
	return out;
}

inline double chern_number(const ChernReport &rep, const ChernPolynomial &poly)
{
	if (poly.terms.empty())
		return 0.0;
	require(poly.dim == rep.dim, ErrorKind::config, "Chern polynomial degree does not match the mesh dimension");
	CompensatedSum s;
	for (auto &[k, v] : poly.terms)
		s.add(v * rep.total(k));
	return s.value();
}

inline double chern_number(const Bundle &b, const ChernPolynomial &poly)
{
	if (poly.terms.empty())
		return 0.0;
	require(poly.dim == b.base->dim, ErrorKind::config, "Chern polynomial degree does not match the mesh dimension");
	return chern_number(chern_densities(b), poly);
}

struct Admissibility {
	bool admissible = false;
	bool flat_ok = true;
	std::string witness;       // monomial with a nonzero total
	double witness_value = 0.0;
	std::string failed_region; // first flat region that is curved
	double flat_defect = 0.0;
};

/// Trivial-flat on every flagged region and some nonzero Chern number.
inline Admissibility in_k_cross(const Bundle &b, double tol)
{
	Admissibility a;
	const Mesh &m = *b.base;
	for (const auto &name : b.flat_regions) {
		auto it = m.regions.find(name);
		if (it == m.regions.end()) {
			a.flat_ok = false;
			a.failed_region = name;
			break;
		}
		for (int p : m.plaquettes_of(it->second)) {
			double d = dist_identity(b.holonomy(p));
			a.flat_defect = std::max(a.flat_defect, d);
			if (d > tol && a.flat_ok) {
				a.flat_ok = false;
				a.failed_region = name;
			}
		}
	}
	auto basis = chern_basis(m.dim);
	if (!basis.empty()) {
		try {
			auto rep = chern_densities(b);
			for (const auto &k : basis)
				if (std::abs(rep.totals[k]) > tol && a.witness.empty()) {
					a.witness = k;
					a.witness_value = rep.totals[k];
				}
		} catch (const BranchCutError &) {
			// no well-defined sector
		}
	}
	a.admissible = a.flat_ok && !a.witness.empty();
	return a;
}

} // namespace karea
