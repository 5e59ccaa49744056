#pragma once

// Operations producing new meshes or maps between meshes: metric scaling,
// orientation reversal, torus coverings, cellular maps, surgery, connected
// sum and doubling.

#include "karea/generators.hpp"

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace karea {

inline Mesh scale_metric(const Mesh &m, double c)
{
	require(c > 0 && std::isfinite(c), ErrorKind::config, "metric scale factor must be positive");
	Mesh out = m;
	out.metric_scale = m.metric_scale * c;
	return out;
}

/// Same complex with every top cell reflected along its axis 0.
inline Mesh mirror(const Mesh &m)
{
	Mesh out = m;
	if (m.dim >= 1)
		for (auto &c : out.corners[m.dim])
			c = detail::reflect_axis0(c);
	out.finalize();
	return out;
}

/// Cellular map: vertices to vertices and each edge to a (possibly empty)
/// path of target edges.
struct MeshMap {
	std::shared_ptr<const Mesh> source, target;
	std::vector<int> vertex_map;
	std::vector<std::vector<EdgeStep>> edge_paths; // per source edge, from its tail image to its head image
	int degree = 0;
	double lipschitz = 0.0;
};

namespace detail {

/// Shortest edge path from a to b in m using only vertices in `allowed`
/// (all vertices when empty); ties go to the lowest vertex index.
inline std::vector<EdgeStep> shortest_path(const Mesh &m, int a, int b, const std::vector<char> &allowed = {})
{
	if (a == b)
		return {};
	std::vector<int> prev(m.num_vertices, -1);
	std::vector<char> seen(m.num_vertices, 0);
	std::deque<int> q{a};
	seen[a] = 1;
	while (!q.empty()) {
		int v = q.front();
		q.pop_front();
		std::vector<int> nb;
		for (auto [e, tail] : m.incident_edges(v))
			nb.push_back(m.corners[1][e][tail ? 1 : 0]);
		std::sort(nb.begin(), nb.end());
		for (int w : nb) {
			if (seen[w] || (!allowed.empty() && !allowed[w]))
				continue;
			seen[w] = 1;
			prev[w] = v;
			q.push_back(w);
		}
	}
	require(seen[b], ErrorKind::config, "no path between mapped vertices");
	std::vector<int> verts{b};
	while (verts.back() != a)
		verts.push_back(prev[verts.back()]);
	std::reverse(verts.begin(), verts.end());
	std::vector<EdgeStep> path;
	for (std::size_t i = 0; i + 1 < verts.size(); ++i)
		path.push_back(m.edge_step(verts[i], verts[i + 1]));
	return path;
}

} // namespace detail

/// Signed top-cell preimage counts; the degree is the most common count.
inline int map_degree(const MeshMap &f)
{
	const Mesh &s = *f.source, &t = *f.target;
	require(s.dim == t.dim, ErrorKind::config, "degree needs equal dimensions");
	std::vector<int> count(t.num_top(), 0);
	for (int c = 0; c < s.num_top(); ++c) {
		Corners img = s.corners[s.dim][c];
		for (int &v : img)
			v = f.vertex_map[v];
		int tc = t.find_cell(t.dim, img);
		if (tc < 0)
			continue;
		count[tc] += detail::relative_orientation(t.corners[t.dim][tc], img);
	}
	std::map<int, int> freq;
	for (int x : count)
		++freq[x];
	int best = 0, best_n = -1;
	for (auto [x, n] : freq)
		if (n > best_n) {
			best = x;
			best_n = n;
		}
	return best;
}

/// Largest stretch factor: image path length over edge length, and the square
/// root of the area ratio on plaquettes mapped onto plaquettes.
inline double map_lipschitz(const MeshMap &f)
{
	const Mesh &s = *f.source, &t = *f.target;
	double lip = 0.0;
	for (int e = 0; e < s.num_edges(); ++e) {
		double len = 0.0;
		for (auto st : f.edge_paths[e])
			len += t.edge_length(st.edge);
		lip = std::max(lip, len / s.edge_length(e));
	}
	if (s.dim >= 2 && t.dim >= 2)
		for (int p = 0; p < s.num_plaquettes(); ++p) {
			Corners img = s.corners[2][p];
			for (int &v : img)
				v = f.vertex_map[v];
			int tp = t.find_cell(2, img);
			if (tp >= 0)
				lip = std::max(lip, std::sqrt(t.plaquette_area(tp) / s.plaquette_area(p)));
		}
	return lip;
}

/// Builds a map from a vertex map; edges whose endpoint images are not
/// adjacent are routed along shortest paths through `allowed` vertices.
/// A router, when given, supplies the path for edges whose endpoint images
/// are not adjacent.
using PathRouter = std::function<std::vector<EdgeStep>(int, int)>;

inline MeshMap make_map(std::shared_ptr<const Mesh> source, std::shared_ptr<const Mesh> target, std::vector<int> vmap,
                        const std::vector<char> &allowed = {}, const PathRouter &router = {})
{
	require(static_cast<int>(vmap.size()) == source->num_vertices, ErrorKind::config, "vertex map size mismatch");
	for (int v : vmap)
		require(v >= 0 && v < target->num_vertices, ErrorKind::config, "vertex map image out of range");
	MeshMap f;
	f.source = std::move(source);
	f.target = std::move(target);
	f.vertex_map = std::move(vmap);
	const Mesh &s = *f.source, &t = *f.target;
	f.edge_paths.resize(s.num_edges());
	for (int e = 0; e < s.num_edges(); ++e) {
		int a = f.vertex_map[s.corners[1][e][0]], b = f.vertex_map[s.corners[1][e][1]];
		if (a == b)
			continue;
		int te = t.find_edge(a, b);
		if (te >= 0)
			f.edge_paths[e] = {t.edge_step(a, b)};
		else if (router)
			f.edge_paths[e] = router(a, b);
		else
			f.edge_paths[e] = detail::shortest_path(t, a, b, allowed);
	}
	f.degree = map_degree(f);
	f.lipschitz = map_lipschitz(f);
	return f;
}

inline MeshMap identity_map(std::shared_ptr<const Mesh> m)
{
	std::vector<int> id(m->num_vertices);
	std::iota(id.begin(), id.end(), 0);
	return make_map(m, m, std::move(id));
}

/// Finite covering of a torus by the torus unrolled factor[i] times along axis i.
struct CoveringMap {
	std::shared_ptr<const Mesh> total, base;
	std::vector<int> projection; // total vertex -> base vertex
	std::vector<int> sheet;      // total vertex -> sheet index
	std::vector<int> factors;
	int sheets = 1;

	MeshMap as_map() const { return make_map(total, base, projection); }
};

namespace detail {

inline int lattice_index(const std::vector<int> &c, const std::vector<int> &n)
{
	int idx = 0, stride = 1;
	for (std::size_t i = 0; i < c.size(); ++i) {
		idx += c[i] * stride;
		stride *= n[i];
	}
	return idx;
}

} // namespace detail

inline CoveringMap covering(std::shared_ptr<const Mesh> base, const std::vector<int> &factors)
{
	const Mesh &m = *base;
	require(m.generator == "torus" && !m.periods.empty(), ErrorKind::unsupported, "coverings are defined for torus meshes only");
	const int d = m.dim;
	require(static_cast<int>(factors.size()) == d, ErrorKind::config, "one covering factor per torus axis is required");
	std::vector<int> n(d);
	std::vector<double> side(d);
	for (int i = 0; i < d; ++i) {
		require(factors[i] >= 1, ErrorKind::config, "covering factors must be positive");
		std::vector<int> step(d, 0);
		step[i] = 1;
		EdgeStep e = m.edge_step(0, detail::lattice_index(step, m.periods));
		n[i] = m.periods[i] * factors[i];
		side[i] = m.base_measure[1][e.edge] * n[i];
	}
	auto total = torus(n, side);
	total.metric_scale = m.metric_scale;
	CoveringMap cov;
	cov.factors = factors;
	cov.base = base;
	cov.sheets = 1;
	for (int f : factors)
		cov.sheets *= f;
	cov.projection.resize(total.num_vertices);
	cov.sheet.resize(total.num_vertices);
	for (int v = 0; v < total.num_vertices; ++v) {
		std::vector<int> c = total.coords[v], q(d);
		for (int i = 0; i < d; ++i) {
			q[i] = c[i] / m.periods[i];
			c[i] %= m.periods[i];
		}
		cov.projection[v] = detail::lattice_index(c, m.periods);
		cov.sheet[v] = detail::lattice_index(q, factors);
	}
	cov.total = std::make_shared<const Mesh>(std::move(total));
	return cov;
}

/// Replacement of an embedded S^p x D^q by D^{p+1} x S^{q-1}.
struct SurgeryPlan {
	int p = 0, q = 0;
	std::shared_ptr<const Mesh> source;
	std::vector<int> region;            // top cells of the source forming S^p x D^q
	int collar_levels = 2;              // segments on each side of the cut
	std::shared_ptr<const Mesh> handle; // D^{p+1} x S^{q-1}
	std::map<int, int> glue;            // boundary vertex of the region -> handle vertex
	std::optional<std::map<int, int>> glue_alt; // tried when `glue` reverses orientation
};

/// Surgered mesh plus the bookkeeping needed to relate it to its source.
struct SurgeryResult {
	Mesh mesh;
	std::vector<int> source_vertex; // source vertex -> new vertex (-1 inside the region)
	std::vector<int> handle_vertex; // handle vertex -> new vertex
	SubMesh region;                 // the removed piece Y with its source vertex map
	SubMesh slice;                  // the gluing boundary N with its source vertex map
};

inline int sphere_euler(int p) { return p % 2 == 0 ? 2 : 0; }

inline SurgeryResult surgery(const SurgeryPlan &plan)
{
	require(plan.source && plan.handle, ErrorKind::plan, "surgery plan lacks a source or handle mesh");
	const Mesh &m = *plan.source;
	const Mesh &h = *plan.handle;
	const int n = m.dim;
	require(plan.p >= 0 && plan.q >= 1 && plan.p + plan.q == n, ErrorKind::plan, "surgery indices must satisfy p + q = dim, q >= 1");
	require(h.dim == n, ErrorKind::plan, "handle dimension mismatch");
	require(plan.collar_levels >= 1, ErrorKind::plan, "collar needs at least one level per side");
	require(!plan.region.empty(), ErrorKind::plan, "surgery region is empty");

	SurgeryResult out;
	out.region = restrict_to(m, plan.region);
	const Mesh &y = out.region.mesh;
	require(y.euler_characteristic() == sphere_euler(plan.p), ErrorKind::plan,
	        "region Euler characteristic does not match S^p x D^q");
	require(y.num_components() == (plan.p == 0 ? 2 : 1), ErrorKind::plan, "region has the wrong number of components");
	SubMesh bd = boundary_mesh(y);
	for (int &v : bd.to_parent)
		v = out.region.to_parent[v];
	const Mesh &slice = bd.mesh;
	const int ns = slice.num_vertices;
	const int expect_components = (plan.p == 0 || plan.q == 1) ? 2 : 1;
	require(slice.num_components() == expect_components, ErrorKind::plan, "region boundary is not S^p x S^(q-1)");
	auto hb = h.boundary_vertices();
	require(static_cast<int>(hb.size()) == ns, ErrorKind::gluing, "handle boundary and region boundary differ in size");

	std::vector<char> in_region(m.num_top(), 0);
	for (int c : plan.region) {
		require(c >= 0 && c < m.num_top(), ErrorKind::plan, "region cell out of range");
		in_region[c] = 1;
	}

	auto attempt = [&](const std::map<int, int> &glue) {
		// the gluing must carry boundary facets onto handle boundary facets
		std::vector<int> g(ns);
		std::set<int> image;
		for (int s = 0; s < ns; ++s) {
			auto it = glue.find(bd.to_parent[s]);
			require(it != glue.end(), ErrorKind::gluing, "gluing map misses a boundary vertex");
			g[s] = it->second;
			image.insert(it->second);
		}
		require(image.size() == hb.size() && std::includes(hb.begin(), hb.end(), image.begin(), image.end()),
		        ErrorKind::gluing, "gluing map is not a bijection onto the handle boundary");
		std::set<std::vector<int>> hfacets;
		for (int f : h.boundary_facets())
			hfacets.insert(detail::sorted(h.corners[n - 1][f]));
		if (n >= 2)
			for (int f = 0; f < slice.num_top(); ++f) {
				Corners c = slice.corners[n - 1][f];
				for (int &v : c)
					v = g[v];
				require(hfacets.count(detail::sorted(c)) == 1, ErrorKind::gluing, "boundary complexes are not isomorphic under the gluing map");
			}

		const int levels = 2 * plan.collar_levels;
		const double step = 4.0 / plan.collar_levels;
		MeshBuilder mb(n);
		mb.add_vertices(m.num_vertices);
		std::vector<std::vector<std::string>> tags(m.num_top());
		for (auto &[name, cells] : m.regions)
			for (int c : cells)
				tags[c].push_back(name);
		for (int c = 0; c < m.num_top(); ++c)
			if (!in_region[c]) {
				tags[c].push_back("M'");
				mb.add_cell(n, m.corners[n][c], m.measure(n, c), true, tags[c]);
			}
		for (int k = 1; k < n; ++k)
			for (int i = 0; i < m.count(k); ++i)
				mb.add_cell(k, m.corners[k][i], m.measure(k, i));
		// collar N x [-4, 4], layer k at t = -4 + k * step
		Mesh col = product(slice, interval(levels, -4.0, 4.0));
		int oc = mb.num_raw_vertices();
		mb.add_vertices(col.num_vertices);
		for (int k = 1; k <= n; ++k)
			for (int i = 0; i < col.count(k); ++i) {
				Corners c = col.corners[k][i];
				std::vector<std::string> t;
				if (k == n) {
					int layer = *std::min_element(c.begin(), c.end()) / ns;
					t = {"collar", layer < plan.collar_levels ? "M'" : "X"};
				}
				for (int &v : c)
					v += oc;
				mb.add_cell(k, std::move(c), col.measure(k, i), false, t);
			}
		int oh = mb.num_raw_vertices();
		mb.add_vertices(h.num_vertices);
		std::vector<std::vector<std::string>> htags(h.num_top(), {"X", "handle"});
		for (int k = 1; k <= n; ++k)
			for (int i = 0; i < h.count(k); ++i) {
				Corners c = h.corners[k][i];
				for (int &v : c)
					v += oh;
				mb.add_cell(k, std::move(c), h.measure(k, i), false, k == n ? htags[i] : std::vector<std::string>{});
			}
		for (int s = 0; s < ns; ++s) {
			mb.identify(oc + s, bd.to_parent[s]);
			mb.identify(oc + s + ns * levels, oh + g[s]);
		}
		auto r = mb.build(Orient::propagate);
		SurgeryResult res;
		res.mesh = std::move(r.mesh);
		res.source_vertex.assign(r.vertex_map.begin(), r.vertex_map.begin() + m.num_vertices);
		res.handle_vertex.assign(r.vertex_map.begin() + oh, r.vertex_map.begin() + oh + h.num_vertices);
		Collar c;
		c.region = "collar";
		c.cut_layer = plan.collar_levels;
		for (int k = 0; k <= levels; ++k) {
			c.t.push_back(-4.0 + k * step);
			std::vector<int> layer(ns);
			for (int s = 0; s < ns; ++s)
				layer[s] = r.vertex_map[oc + s + ns * k];
			c.layers.push_back(std::move(layer));
		}
		c.anchor = bd.to_parent;
		res.mesh.collar = std::move(c);
		res.mesh.generator = "surgery";
		return res;
	};

	SurgeryResult res;
	try {
		res = attempt(plan.glue);
	} catch (const Error &e) {
		if (e.kind() != ErrorKind::gluing || !plan.glue_alt)
			throw;
		res = attempt(*plan.glue_alt);
	}
	res.region = std::move(out.region);
	res.slice = std::move(bd);
	return res;
}

/// p-surgery along a band S^1 x box on a torus of dim 2 or 4: the circle runs
/// along axis 0 and the box [o, o + w]^(dim-1) spans the other axes. The
/// circle length (vertices along axis 0) must be a multiple of 4.
inline SurgeryPlan band_plan(std::shared_ptr<const Mesh> torus_mesh, int origin, int width, int collar_levels)
{
	const Mesh &m = *torus_mesh;
	require(m.generator == "torus", ErrorKind::plan, "band surgery needs a torus mesh");
	const int n = m.dim;
	const int len = m.periods[0];
	require(len % 4 == 0, ErrorKind::plan, "circle resolution must be a multiple of 4 to match the disk boundary");
	for (int i = 1; i < n; ++i)
		require(width >= 1 && width < m.periods[i], ErrorKind::plan, "band width must be smaller than the torus");
	SurgeryPlan plan;
	plan.p = 1;
	plan.q = n - 1;
	plan.source = torus_mesh;
	plan.collar_levels = collar_levels;
	auto inside = [&](const std::vector<int> &c) {
		for (int i = 1; i < n; ++i) {
			int r = ((c[i] - origin) % m.periods[i] + m.periods[i]) % m.periods[i];
			if (r > width)
				return false;
		}
		return true;
	};
	auto cell_inside = [&](const std::vector<int> &c) {
		for (int i = 1; i < n; ++i) {
			int r = ((c[i] - origin) % m.periods[i] + m.periods[i]) % m.periods[i];
			if (r >= width)
				return false;
		}
		return true;
	};
	for (int c = 0; c < m.num_top(); ++c)
		if (cell_inside(m.coords[m.corners[n][c][0]]))
			plan.region.push_back(c);
	// edge length along axis 0 sets the disk cell size
	const double h0 = m.edge_length(m.edge_step(0, 1).edge);
	const int k = len / 4;
	Mesh disk_mesh = disk(k, h0);
	std::vector<int> step1(n, 0);
	step1[1] = 1;
	const double h1 = m.edge_length(m.edge_step(0, detail::lattice_index(step1, m.periods)).edge);
	for (int i = 2; i < n; ++i) {
		std::vector<int> step(n, 0);
		step[i] = 1;
		double hi = m.edge_length(m.edge_step(0, detail::lattice_index(step, m.periods)).edge);
		require(std::abs(hi - h1) <= 1e-12 * h1, ErrorKind::plan, "band surgery needs equal edge lengths across the box");
	}
	Mesh box = cube(n - 1, width, h1);
	SubMesh sph = boundary_mesh(box);
	Mesh hm = product(disk_mesh, sph.mesh);
	hm.generator = "disk_x_sphere";
	std::map<std::vector<int>, int> sphere_vertex;
	for (int v = 0; v < sph.mesh.num_vertices; ++v)
		sphere_vertex[box.coords[sph.to_parent[v]]] = v;
	std::vector<int> cycle(4 * k);
	for (int v = 0; v < disk_mesh.num_vertices; ++v) {
		int pos = detail::square_cycle_index(k, v);
		if (pos >= 0)
			cycle[pos] = v;
	}
	for (int v = 0; v < m.num_vertices; ++v) {
		const auto &c = m.coords[v];
		if (!inside(c))
			continue;
		std::vector<int> rel;
		bool on_boundary = false;
		for (int i = 1; i < n; ++i) {
			int r = ((c[i] - origin) % m.periods[i] + m.periods[i]) % m.periods[i];
			rel.push_back(r);
			on_boundary = on_boundary || r == 0 || r == width;
		}
		if (!on_boundary)
			continue;
		plan.glue[v] = cycle[c[0]] + disk_mesh.num_vertices * sphere_vertex.at(rel);
	}
	plan.handle = std::make_shared<const Mesh>(std::move(hm));
	return plan;
}

/// 0-surgery removing two disjoint top cells (each a disk D^n) and joining
/// their boundaries by a tube D^1 x S^(n-1).
inline SurgeryPlan cell_pair_plan(std::shared_ptr<const Mesh> source, int cell1, int cell2, int collar_levels)
{
	const Mesh &m = *source;
	const int n = m.dim;
	require(n >= 1, ErrorKind::plan, "0-surgery needs positive dimension");
	require(cell1 >= 0 && cell1 < m.num_top() && cell2 >= 0 && cell2 < m.num_top() && cell1 != cell2, ErrorKind::config,
	        "0-surgery needs two distinct top cells");
	SurgeryPlan plan;
	plan.p = 0;
	plan.q = n;
	plan.source = source;
	plan.region = {cell1, cell2};
	plan.collar_levels = collar_levels;
	Mesh box = cube(n, 1, 1.0);
	Mesh sph = n == 1 ? point_pair() : boundary_mesh(box).mesh;
	// boundary_mesh keeps the cube's corner numbering (it drops no vertex)
	const double len = m.edge_length(0);
	Mesh tube = product(interval(1, 0.0, len), sph);
	tube.generator = "tube";
	const auto &c1 = m.corners[n][cell1];
	const auto &c2 = m.corners[n][cell2];
	std::map<int, int> alt;
	for (int x = 0; x < (1 << n); ++x) {
		plan.glue[c1[x]] = 0 + 2 * x;
		plan.glue[c2[x]] = 1 + 2 * x;
		alt[c1[x]] = 0 + 2 * x;
		alt[c2[x]] = 1 + 2 * (x ^ 1);
	}
	plan.glue_alt = alt;
	plan.handle = std::make_shared<const Mesh>(std::move(tube));
	return plan;
}

/// Result of a connected sum: the surgery record plus the summand offsets.
struct ConnectedSum {
	SurgeryResult surgery;
	SurgeryPlan plan;
	int m1_vertices = 0; // source vertices below this belong to the first summand
	int m1_top = 0;
	int cell1 = 0, cell2 = 0;
};

inline ConnectedSum connected_sum(const Mesh &m1, const Mesh &m2, int cell1, int cell2, int collar_levels = 2)
{
	require(m1.dim == m2.dim, ErrorKind::config, "connected sum needs equal dimensions");
	require(m1.is_closed() && m2.is_closed(), ErrorKind::config, "connected sum needs closed meshes");
	require(cell1 >= 0 && cell1 < m1.num_top() && cell2 >= 0 && cell2 < m2.num_top(), ErrorKind::config,
	        "connected sum cell out of range");
	MeshBuilder mb(m1.dim);
	mb.add_mesh(m1, true, "", {"M1"});
	mb.add_mesh(m2, true, "", {"M2"});
	auto src = std::make_shared<const Mesh>(mb.build(Orient::keep).mesh);
	ConnectedSum cs;
	cs.m1_vertices = m1.num_vertices;
	cs.m1_top = m1.num_top();
	cs.cell1 = cell1;
	cs.cell2 = m1.num_top() + cell2;
	cs.plan = cell_pair_plan(src, cs.cell1, cs.cell2, collar_levels);
	cs.surgery = surgery(cs.plan);
	auto &reg = cs.surgery.mesh.regions;
	if (reg.count("M1"))
		reg["M1\\D"] = reg["M1"];
	if (reg.count("M2"))
		reg["M2\\D"] = reg["M2"];
	reg.erase("M1");
	reg.erase("M2");
	return cs;
}

/// m glued to its mirror image along the boundary.
struct DoubleResult {
	Mesh mesh;
	std::vector<int> first, second; // source vertex -> vertex in each copy
	std::vector<int> involution;    // vertex -> its image under the copy swap
};

inline DoubleResult double_mesh(const Mesh &m)
{
	require(!m.is_closed(), ErrorKind::config, "doubling needs a mesh with boundary");
	MeshBuilder mb(m.dim);
	int o1 = mb.add_mesh(m, true, "", {"first"});
	Mesh mm = mirror(m);
	mm.regions.clear();
	int o2 = mb.add_mesh(mm, true, "", {"second"});
	for (int v : m.boundary_vertices())
		mb.identify(o1 + v, o2 + v);
	auto r = mb.build(Orient::propagate);
	DoubleResult d;
	d.first.assign(r.vertex_map.begin() + o1, r.vertex_map.begin() + o1 + m.num_vertices);
	d.second.assign(r.vertex_map.begin() + o2, r.vertex_map.begin() + o2 + m.num_vertices);
	d.mesh = std::move(r.mesh);
	d.mesh.generator = "double";
	d.involution.assign(d.mesh.num_vertices, -1);
	for (int v = 0; v < m.num_vertices; ++v) {
		d.involution[d.first[v]] = d.second[v];
		d.involution[d.second[v]] = d.first[v];
	}
	return d;
}

/// Degree-one map M1 # M2 -> M1 collapsing M2 minus its disk, the collar and
/// the tube onto the first corner of the removed cell of M1.
inline MeshMap collapse_map(const ConnectedSum &cs, std::shared_ptr<const Mesh> m1)
{
	const Mesh &sum = cs.surgery.mesh;
	require(m1->num_vertices == cs.m1_vertices, ErrorKind::config, "collapse target does not match the first summand");
	const auto &disk_corners = m1->corners[m1->dim][cs.cell1];
	const int x0 = disk_corners[0];
	std::vector<int> vmap(sum.num_vertices, x0);
	for (int v = 0; v < cs.m1_vertices; ++v) {
		int u = cs.surgery.source_vertex[v];
		if (u >= 0)
			vmap[u] = v;
	}
	std::vector<char> allowed(m1->num_vertices, 0);
	for (int v : disk_corners)
		allowed[v] = 1;
	return make_map(std::make_shared<const Mesh>(sum), std::move(m1), std::move(vmap), allowed);
}

} // namespace karea
