#pragma once

// Hermitian bundles with compatible connections as unitary edge transports.
// transport[e] carries the fibre at the tail of edge e to the fibre at its
// head; the reverse direction uses the adjoint.

#include "karea/mesh_ops.hpp"

#include <deque>
#include <random>

namespace karea {

struct Bundle {
	std::shared_ptr<const Mesh> base;
	int rank = 1;
	std::vector<Mat> transport;
	std::vector<std::string> flat_regions;

	Mat along(EdgeStep s) const { return s.forward ? transport[s.edge] : Mat(transport[s.edge].adjoint()); }

	/// Transport along a path, as a map from the fibre at its start to the
	/// fibre at its end.
	Mat along(const std::vector<EdgeStep> &path) const
	{
		Mat u = identity(rank);
		for (auto s : path)
			u = along(s) * u;
		return u;
	}

	/// Holonomy of plaquette p based at its first corner.
	Mat holonomy(int p) const
	{
		const auto &loop = base->plaquette_loop(p);
		Mat u = along(loop[0]);
		for (int i = 1; i < 4; ++i)
			u = along(loop[i]) * u;
		return u;
	}
};

struct GaugeTransform {
	std::shared_ptr<const Mesh> base;
	int rank = 1;
	std::vector<Mat> frame; // per vertex
};

struct CurvatureReport {
	std::vector<Mat> field_strength; // per plaquette, anti-Hermitian, 1/area units
	double sup_norm = 0.0;
	int argmax = -1;
};

inline void require_same_base(const Mesh &a, const Mesh &b, const std::string &what)
{
	require(&a == &b || (a.num_vertices == b.num_vertices && a.combinatorial_hash() == b.combinatorial_hash()),
	        ErrorKind::config, what + ": base meshes differ");
}

inline Bundle trivial_bundle(std::shared_ptr<const Mesh> m, int rank)
{
	require(rank >= 1, ErrorKind::config, "bundle rank must be positive");
	Bundle b;
	b.rank = rank;
	b.transport.assign(m->num_edges(), identity(rank));
	b.base = std::move(m);
	return b;
}

inline GaugeTransform identity_gauge(std::shared_ptr<const Mesh> m, int rank)
{
	GaugeTransform g;
	g.rank = rank;
	g.frame.assign(m->num_vertices, identity(rank));
	g.base = std::move(m);
	return g;
}

template <class Rng> GaugeTransform random_gauge(std::shared_ptr<const Mesh> m, int rank, Rng &rng)
{
	GaugeTransform g;
	g.rank = rank;
	g.frame.reserve(m->num_vertices);
	for (int v = 0; v < m->num_vertices; ++v)
		g.frame.push_back(random_unitary(rank, rng));
	g.base = std::move(m);
	return g;
}

inline Bundle gauge(const Bundle &b, const GaugeTransform &g)
{
	require(b.rank == g.rank, ErrorKind::config, "gauge rank mismatch");
	require_same_base(*b.base, *g.base, "gauge");
	Bundle out = b;
	const Mesh &m = *b.base;
	parallel_for(m.num_edges(), [&](int e) {
		const auto &c = m.edge(e);
		out.transport[e] = g.frame[c[1]] * b.transport[e] * g.frame[c[0]].adjoint();
	});
	return out;
}

inline GaugeTransform compose(const GaugeTransform &second, const GaugeTransform &first)
{
	GaugeTransform g = first;
	for (std::size_t v = 0; v < g.frame.size(); ++v)
		g.frame[v] = second.frame[v] * first.frame[v];
	return g;
}

inline CurvatureReport curvature(const Bundle &b, double guard = branch_cut_guard)
{
	const Mesh &m = *b.base;
	CurvatureReport r;
	const int np = m.num_plaquettes();
	r.field_strength.resize(np);
	std::vector<double> norms(np, 0.0);
	parallel_for(np, [&](int p) {
		r.field_strength[p] = log_unitary(b.holonomy(p), p, guard) / m.plaquette_area(p);
		norms[p] = norm_normal(r.field_strength[p]);
	});
	for (int p = 0; p < np; ++p)
		if (norms[p] > r.sup_norm || r.argmax < 0) {
			r.sup_norm = norms[p];
			r.argmax = p;
		}
	return r;
}

/// Largest ||U - I|| over all edges.
inline double max_edge_residual(const Bundle &b)
{
	double r = 0.0;
	for (const auto &u : b.transport)
		r = std::max(r, dist_identity(u));
	return r;
}

/// Largest ||U*U - I|| over all edges.
inline double max_unitarity_defect(const Bundle &b)
{
	double r = 0.0;
	for (const auto &u : b.transport)
		r = std::max(r, unitarity_defect(u));
	return r;
}

/// Restriction to a sub-complex whose edges are edges of the parent.
inline Bundle restrict_bundle(const Bundle &b, const SubMesh &sub)
{
	Bundle out;
	out.base = std::make_shared<const Mesh>(sub.mesh);
	out.rank = b.rank;
	out.transport.resize(sub.mesh.num_edges());
	for (int e = 0; e < sub.mesh.num_edges(); ++e) {
		const auto &c = sub.mesh.edge(e);
		out.transport[e] = b.along(b.base->edge_step(sub.to_parent[c[0]], sub.to_parent[c[1]]));
	}
	for (const auto &r : b.flat_regions)
		if (sub.mesh.regions.count(r))
			out.flat_regions.push_back(r);
	return out;
}

inline Bundle direct_sum(const Bundle &a, const Bundle &b)
{
	require_same_base(*a.base, *b.base, "direct sum");
	Bundle out;
	out.base = a.base;
	out.rank = a.rank + b.rank;
	out.flat_regions = a.flat_regions;
	out.transport.resize(a.transport.size());
	for (std::size_t e = 0; e < a.transport.size(); ++e) {
		Mat u = Mat::Zero(out.rank, out.rank);
		u.topLeftCorner(a.rank, a.rank) = a.transport[e];
		u.bottomRightCorner(b.rank, b.rank) = b.transport[e];
		out.transport[e] = std::move(u);
	}
	return out;
}

/// Multiplies each transport by exp(A_e) with A_e a random anti-Hermitian
/// matrix: a Gaussian direction rescaled to a uniform norm in [0, amplitude].
inline Bundle perturb(const Bundle &b, double amplitude, std::uint64_t seed)
{
	require(amplitude >= 0.0, ErrorKind::config, "perturbation amplitude must be non-negative");
	Bundle out = b;
	if (amplitude == 0.0)
		return out;
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> unif(0.0, 1.0);
	for (auto &u : out.transport) {
		Mat a = random_antiherm(b.rank, rng);
		double n = norm_normal(a);
		double s = amplitude * unif(rng);
		if (n > 0)
			u = exp_antiherm(a * (s / n)) * u;
	}
	return out;
}

/// Perturbation with the amplitude tuned (bisection on the seeded direction
/// field) so that ||R|| of the result equals `target` to relative `rtol`.
inline Bundle perturb_to_curvature(const Bundle &b, double target, std::uint64_t seed, double rtol = 1e-9)
{
	require(target > 0.0, ErrorKind::config, "target curvature must be positive");
	auto norm_at = [&](double a) { return curvature(perturb(b, a, seed)).sup_norm; };
	double lo = 0.0, hi = 1e-3;
	while (norm_at(hi) < target) {
		lo = hi;
		hi *= 2.0;
		require(hi < 4.0, ErrorKind::precondition, "target curvature is out of reach of small perturbations");
	}
	for (int it = 0; it < 200 && hi - lo > rtol * hi; ++it) {
		double mid = 0.5 * (lo + hi);
		(norm_at(mid) < target ? lo : hi) = mid;
	}
	return perturb(b, hi, seed);
}

/// Transport of f*E along an edge is the transport of E along its image path.
inline Bundle pullback(const Bundle &b, const MeshMap &f)
{
	require(f.target != nullptr && f.source != nullptr, ErrorKind::config, "pullback map is incomplete");
	require_same_base(*b.base, *f.target, "pullback");
	Bundle out;
	out.base = f.source;
	out.rank = b.rank;
	out.transport.resize(f.source->num_edges());
	parallel_for(f.source->num_edges(), [&](int e) { out.transport[e] = b.along(f.edge_paths[e]); });
	return out;
}

/// Direct image under a finite covering: the fibre over a base vertex is the
/// sum of the fibres over its preimages, ordered by sheet.
inline Bundle direct_image(const Bundle &b, const CoveringMap &cov)
{
	require_same_base(*b.base, *cov.total, "direct image");
	const Mesh &tot = *cov.total, &base = *cov.base;
	const int r = b.rank, s = cov.sheets;
	Bundle out;
	out.base = cov.base;
	out.rank = r * s;
	out.transport.assign(base.num_edges(), Mat::Zero(r * s, r * s));
	std::vector<int> filled(base.num_edges(), 0);
	for (int e = 0; e < tot.num_edges(); ++e) {
		int a = tot.edge(e)[0], c = tot.edge(e)[1];
		EdgeStep be = base.edge_step(cov.projection[a], cov.projection[c]);
		int sa = cov.sheet[a], sc = cov.sheet[c];
		if (be.forward)
			out.transport[be.edge].block(sc * r, sa * r, r, r) = b.transport[e];
		else
			out.transport[be.edge].block(sa * r, sc * r, r, r) = b.transport[e].adjoint();
		++filled[be.edge];
	}
	for (int x : filled)
		require(x == s, ErrorKind::config, "covering does not lift every base edge once per sheet");
	return out;
}

namespace detail {

/// Edge phases on a closed oriented surface whose plaquette loop sums are
/// theta[p] (mod 2 pi). Non-dual-tree edges carry phase 0; each dual-tree
/// edge is solved from the leaves of the dual tree towards its root.
inline std::vector<double> solve_edge_phases(const Mesh &m, const std::vector<double> &theta)
{
	require(m.dim == 2, ErrorKind::unsupported, "edge phase solver needs a surface");
	const int np = m.num_plaquettes(), ne = m.num_edges();
	std::vector<std::vector<int>> edge_plaq(ne);
	for (int p = 0; p < np; ++p)
		for (auto st : m.plaquette_loop(p))
			edge_plaq[st.edge].push_back(p);
	std::vector<double> phase(ne, 0.0);
	std::vector<int> parent_edge(np, -1), order;
	std::vector<char> seen(np, 0);
	for (int root = 0; root < np; ++root) {
		if (seen[root])
			continue;
		seen[root] = 1;
		std::deque<int> q{root};
		while (!q.empty()) {
			int p = q.front();
			q.pop_front();
			order.push_back(p);
			for (auto st : m.plaquette_loop(p))
				for (int o : edge_plaq[st.edge])
					if (!seen[o]) {
						seen[o] = 1;
						parent_edge[o] = st.edge;
						q.push_back(o);
					}
		}
	}
	for (auto it = order.rbegin(); it != order.rend(); ++it) {
		int p = *it;
		int pe = parent_edge[p];
		if (pe < 0)
			continue;
		double rest = 0.0;
		int sign = 0;
		for (auto st : m.plaquette_loop(p)) {
			if (st.edge == pe)
				sign = st.forward ? 1 : -1;
			else
				rest += st.forward ? phase[st.edge] : -phase[st.edge];
		}
		phase[pe] = sign * (theta[p] - rest);
	}
	return phase;
}

inline Bundle monopole_surface(std::shared_ptr<const Mesh> m, long flux)
{
	require(m->dim == 2 && m->is_closed(), ErrorKind::unsupported, "monopole bundles need a closed surface");
	const double area = m->total_measure(2);
	std::vector<double> theta(m->num_plaquettes());
	for (int p = 0; p < m->num_plaquettes(); ++p)
		theta[p] = two_pi * static_cast<double>(flux) * m->plaquette_area(p) / area;
	auto phase = solve_edge_phases(*m, theta);
	Bundle b = trivial_bundle(m, 1);
	for (int e = 0; e < m->num_edges(); ++e)
		b.transport[e](0, 0) = std::polar(1.0, phase[e]);
	return b;
}

/// External tensor product of line bundles on the two factors of a product.
inline Bundle monopole_product(std::shared_ptr<const Mesh> m, const std::vector<long> &flux);

inline Bundle monopole_any(std::shared_ptr<const Mesh> m, const std::vector<long> &flux)
{
	if (m->factor_a && m->factor_b && m->dim >= 4)
		return monopole_product(std::move(m), flux);
	require(flux.size() == 1, ErrorKind::config, "one flux per 2D factor is required");
	return monopole_surface(std::move(m), flux[0]);
}

inline Bundle monopole_product(std::shared_ptr<const Mesh> m, const std::vector<long> &flux)
{
	const Mesh &a = *m->factor_a, &b = *m->factor_b;
	require(a.dim % 2 == 0 && b.dim % 2 == 0, ErrorKind::unsupported, "monopole factors must be even dimensional");
	const std::size_t fa = a.dim / 2;
	require(flux.size() == fa + b.dim / 2, ErrorKind::config, "one flux per 2D factor is required");
	Bundle la = monopole_any(m->factor_a, std::vector<long>(flux.begin(), flux.begin() + fa));
	Bundle lb = monopole_any(m->factor_b, std::vector<long>(flux.begin() + fa, flux.end()));
	Bundle out = trivial_bundle(m, 1);
	const int na = a.num_vertices;
	for (int e = 0; e < m->num_edges(); ++e) {
		int u = m->edge(e)[0], w = m->edge(e)[1];
		int ua = u % na, ub = u / na, wa = w % na, wb = w / na;
		if (ub == wb)
			out.transport[e] = la.along(a.edge_step(ua, wa));
		else
			out.transport[e] = lb.along(b.edge_step(ub, wb));
	}
	return out;
}

} // namespace detail

/// Rank-one bundle of constant curvature: every plaquette holonomy is
/// exp(2 pi i k area(p) / area(factor)) on each 2D factor with flux k.
inline Bundle monopole_bundle(std::shared_ptr<const Mesh> m, const std::vector<double> &fluxes)
{
	std::vector<long> k;
	for (double f : fluxes) {
		require(std::isfinite(f) && std::abs(f - std::round(f)) < 1e-12, ErrorKind::config, "monopole flux must be an integer");
		k.push_back(std::lround(f));
	}
	require(!k.empty(), ErrorKind::config, "monopole needs at least one flux");
	return detail::monopole_any(std::move(m), k);
}

inline Bundle monopole_bundle(std::shared_ptr<const Mesh> m, double flux)
{
	return monopole_bundle(std::move(m), std::vector<double>{flux});
}

} // namespace karea
