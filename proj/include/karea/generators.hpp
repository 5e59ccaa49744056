#pragma once

// Mesh generators: circles, intervals, products, tori, cube boundaries
// (cubed sphere), disks, surgery handles and cylinders with a collar record.

#include "karea/mesh.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace karea {

/// Smallest resolution accepted along a periodic direction.
inline constexpr int min_periodic_resolution = 3;

/// A mesh together with a map from its vertices to the vertices of a parent.
struct SubMesh {
	Mesh mesh;
	std::vector<int> to_parent;   // vertex -> parent vertex
	std::vector<int> top_parent;  // top cell -> parent top cell (or facet for boundaries)
};

inline Mesh point_pair()
{
	Mesh m;
	m.dim = 0;
	m.num_vertices = 2;
	m.corners.assign(1, {});
	m.base_measure.assign(1, {});
	m.generator = "sphere0";
	m.finalize();
	return m;
}

inline Mesh circle(int n, double length)
{
	require(n >= min_periodic_resolution, ErrorKind::config, "circle resolution below " + std::to_string(min_periodic_resolution));
	require(length > 0, ErrorKind::config, "circle length must be positive");
	Mesh m;
	m.dim = 1;
	m.num_vertices = n;
	m.corners.assign(2, {});
	m.base_measure.assign(2, {});
	for (int i = 0; i < n; ++i) {
		m.corners[1].push_back({i, (i + 1) % n});
		m.base_measure[1].push_back(length / n);
		m.coords.push_back({i});
	}
	m.periods = {n};
	m.generator = "circle";
	m.finalize();
	return m;
}

inline Mesh interval(int n, double a, double b)
{
	require(n >= 1, ErrorKind::config, "interval needs at least one segment");
	require(b > a, ErrorKind::config, "interval endpoints out of order");
	Mesh m;
	m.dim = 1;
	m.num_vertices = n + 1;
	m.corners.assign(2, {});
	m.base_measure.assign(2, {});
	for (int i = 0; i < n; ++i) {
		m.corners[1].push_back({i, i + 1});
		m.base_measure[1].push_back((b - a) / n);
	}
	for (int i = 0; i <= n; ++i)
		m.coords.push_back({i});
	m.generator = "interval";
	m.finalize();
	return m;
}

/// Cartesian product; vertex (va, vb) becomes va + |A| * vb and the axes of A
/// precede those of B.
inline Mesh product(const Mesh &a, const Mesh &b)
{
	Mesh m;
	m.dim = a.dim + b.dim;
	m.num_vertices = a.num_vertices * b.num_vertices;
	m.corners.assign(m.dim + 1, {});
	m.base_measure.assign(m.dim + 1, {});
	const int na = a.num_vertices;
	for (int k = 0; k <= a.dim; ++k)
		for (int l = 0; l <= b.dim; ++l) {
			if (k + l == 0)
				continue;
			for (int i = 0; i < a.count(k); ++i)
				for (int j = 0; j < b.count(l); ++j) {
					const auto &ca = a.corners[k][i];
					const auto &cb = b.corners[l][j];
					Corners c(std::size_t{1} << (k + l));
					for (std::size_t x = 0; x < c.size(); ++x)
						c[x] = ca[x & ((1u << k) - 1)] + na * cb[x >> k];
					m.corners[k + l].push_back(std::move(c));
					m.base_measure[k + l].push_back(a.measure(k, i) * b.measure(l, j));
				}
		}
	if (!a.coords.empty() && !b.coords.empty()) {
		for (int vb = 0; vb < b.num_vertices; ++vb)
			for (int va = 0; va < na; ++va) {
				auto c = a.coords[va];
				c.insert(c.end(), b.coords[vb].begin(), b.coords[vb].end());
				m.coords.push_back(std::move(c));
			}
	}
	if (!a.periods.empty() && !b.periods.empty()) {
		m.periods = a.periods;
		m.periods.insert(m.periods.end(), b.periods.begin(), b.periods.end());
	}
	m.factor_a = std::make_shared<const Mesh>(a);
	m.factor_b = std::make_shared<const Mesh>(b);
	m.generator = "product";
	m.finalize();
	return m;
}

/// Disjoint union; vertices of b are shifted by |a|.
inline Mesh disjoint_union(const Mesh &a, const Mesh &b)
{
	MeshBuilder mb(a.dim);
	mb.add_mesh(a, true);
	mb.add_mesh(b, true);
	if (a.dim == 0) {
		Mesh m;
		m.dim = 0;
		m.num_vertices = a.num_vertices + b.num_vertices;
		m.corners.assign(1, {});
		m.base_measure.assign(1, {});
		m.finalize();
		return m;
	}
	Mesh m = mb.build(Orient::keep).mesh;
	m.generator = "union";
	return m;
}

/// Flat torus with n[i] vertices and side side[i] along axis i. Vertex ids
/// are mixed radix in the lattice coordinates, axis 0 fastest.
inline Mesh torus(const std::vector<int> &n, const std::vector<double> &side)
{
	const int d = static_cast<int>(n.size());
	require(d >= 1 && side.size() == n.size(), ErrorKind::config, "torus needs one resolution and side per axis");
	for (int x : n)
		require(x >= min_periodic_resolution, ErrorKind::config,
		        "torus resolution below " + std::to_string(min_periodic_resolution));
	Mesh m;
	if (d == 1) {
		m = circle(n[0], side[0]);
	} else if (d == 2) {
		m = product(circle(n[0], side[0]), circle(n[1], side[1]));
	} else {
		require(d % 2 == 0, ErrorKind::unsupported, "tori are generated in dimensions 1, 2 and even dimensions");
		m = product(torus({n[0], n[1]}, {side[0], side[1]}),
		            torus(std::vector<int>(n.begin() + 2, n.end()), std::vector<double>(side.begin() + 2, side.end())));
	}
	m.generator = "torus";
	return m;
}

/// Flat square torus T^d with n vertices per direction and the given side.
inline Mesh torus(int d, int n, double side)
{
	require(d >= 1, ErrorKind::config, "torus dimension must be positive");
	return torus(std::vector<int>(d, n), std::vector<double>(d, side));
}

/// Unit-spaced cube [0, n]^d scaled to the given edge length.
inline Mesh cube(int d, int n, double edge)
{
	require(d >= 1, ErrorKind::config, "cube dimension must be positive");
	Mesh m = interval(n, 0.0, n * edge);
	for (int i = 1; i < d; ++i)
		m = product(m, interval(n, 0.0, n * edge));
	m.factor_a.reset();
	m.factor_b.reset();
	m.generator = "cube";
	return m;
}

/// Sub-complex spanned by the given top cells (all their faces).
inline SubMesh restrict_to(const Mesh &m, const std::vector<int> &tops)
{
	MeshBuilder mb(m.dim);
	mb.add_vertices(m.num_vertices);
	std::vector<std::vector<std::string>> tags(m.num_top());
	for (auto &[name, cells] : m.regions)
		for (int c : cells)
			tags[c].push_back(name);
	for (int c : tops)
		mb.add_cell(m.dim, m.corners[m.dim][c], m.measure(m.dim, c), true, tags[c]);
	for (int k = 1; k < m.dim; ++k)
		for (int i = 0; i < m.count(k); ++i)
			mb.add_cell(k, m.corners[k][i], m.measure(k, i));
	auto r = mb.build(Orient::keep);
	SubMesh out;
	out.to_parent.assign(r.mesh.num_vertices, -1);
	for (int v = 0; v < m.num_vertices; ++v)
		if (r.vertex_map[v] >= 0)
			out.to_parent[r.vertex_map[v]] = v;
	out.top_parent.assign(r.mesh.num_top(), -1);
	for (std::size_t i = 0; i < tops.size(); ++i)
		out.top_parent[r.top_map[i]] = tops[i];
	out.mesh = std::move(r.mesh);
	return out;
}

/// Sub-complex of all cells of dimension <= k whose corners lie in `verts`.
inline SubMesh induced(const Mesh &m, const std::vector<int> &verts, int k)
{
	std::vector<char> in(m.num_vertices, 0);
	for (int v : verts)
		in[v] = 1;
	auto inside = [&](const Corners &c) {
		return std::all_of(c.begin(), c.end(), [&](int v) { return in[v] != 0; });
	};
	SubMesh out;
	if (k == 0) {
		out.mesh.dim = 0;
		out.mesh.num_vertices = static_cast<int>(verts.size());
		out.mesh.corners.assign(1, {});
		out.mesh.base_measure.assign(1, {});
		out.mesh.finalize();
		out.to_parent = verts;
		return out;
	}
	MeshBuilder mb(k);
	mb.add_vertices(m.num_vertices);
	std::vector<int> tops;
	for (int j = 1; j <= k; ++j)
		for (int i = 0; i < m.count(j); ++i)
			if (inside(m.corners[j][i])) {
				mb.add_cell(j, m.corners[j][i], m.measure(j, i), j == k);
				if (j == k)
					tops.push_back(i);
			}
	auto r = mb.build(Orient::keep);
	out.to_parent.assign(r.mesh.num_vertices, -1);
	for (int v = 0; v < m.num_vertices; ++v)
		if (r.vertex_map[v] >= 0)
			out.to_parent[r.vertex_map[v]] = v;
	out.top_parent.assign(r.mesh.num_top(), -1);
	for (std::size_t i = 0; i < tops.size(); ++i)
		out.top_parent[r.top_map[i]] = tops[i];
	out.mesh = std::move(r.mesh);
	return out;
}

/// Boundary complex with the orientation induced as the boundary (outward
/// normal first). top_parent maps boundary top cells to facets of m.
inline SubMesh boundary_mesh(const Mesh &m)
{
	auto facets = m.boundary_facets();
	require(!facets.empty(), ErrorKind::config, "mesh has no boundary");
	const int n = m.dim;
	if (n == 1) {
		SubMesh out;
		out.mesh.dim = 0;
		out.mesh.num_vertices = static_cast<int>(facets.size());
		out.mesh.corners.assign(1, {});
		out.mesh.base_measure.assign(1, {});
		out.mesh.finalize();
		out.to_parent = facets;
		out.top_parent = facets;
		return out;
	}
	MeshBuilder mb(n - 1);
	mb.add_vertices(m.num_vertices);
	for (int f : facets) {
		int c = m.top_cofaces(f)[0];
		int s = 0;
		for (auto inc : m.faces(n, c))
			if (inc.face == f)
				s = inc.sign;
		const auto &fc = m.corners[n - 1][f];
		mb.add_cell(n - 1, s > 0 ? fc : detail::reflect_axis0(fc), m.measure(n - 1, f), true);
	}
	for (int k = 1; k < n - 1; ++k)
		for (int i = 0; i < m.count(k); ++i)
			mb.add_cell(k, m.corners[k][i], m.measure(k, i));
	auto r = mb.build(Orient::keep);
	SubMesh out;
	out.to_parent.assign(r.mesh.num_vertices, -1);
	for (int v = 0; v < m.num_vertices; ++v)
		if (r.vertex_map[v] >= 0)
			out.to_parent[r.vertex_map[v]] = v;
	out.top_parent.assign(r.mesh.num_top(), -1);
	for (std::size_t i = 0; i < facets.size(); ++i)
		out.top_parent[r.top_map[i]] = facets[i];
	out.mesh = std::move(r.mesh);
	out.mesh.generator = "boundary";
	return out;
}

/// Combinatorial sphere S^{d-1} as the boundary of [0, n]^d with flat cells.
inline Mesh cube_sphere(int d, int n, double edge)
{
	require(n >= 1, ErrorKind::config, "sphere resolution must be positive");
	if (d == 1)
		return point_pair();
	Mesh m = boundary_mesh(cube(d, n, edge)).mesh;
	m.generator = "sphere";
	return m;
}

/// Cubed sphere S^2 of the given radius: the boundary of [-1, 1]^3 with n
/// cells per cube edge, projected radially. Cells carry the chord length and
/// the vector area of the projected quadrilateral, so the total area
/// approaches 4 pi r^2 from below as n grows.
inline Mesh cubed_sphere(int n, double radius)
{
	require(n >= 2, ErrorKind::config, "cubed-sphere resolution must be at least 2");
	require(radius > 0, ErrorKind::config, "radius must be positive");
	Mesh c = cube(3, n, 1.0);
	SubMesh b = boundary_mesh(c);
	Mesh &m = b.mesh;
	std::vector<Eigen::Vector3d> pos(m.num_vertices);
	for (int v = 0; v < m.num_vertices; ++v) {
		const auto &ix = c.coords[b.to_parent[v]];
		Eigen::Vector3d p(2.0 * ix[0] / n - 1.0, 2.0 * ix[1] / n - 1.0, 2.0 * ix[2] / n - 1.0);
		pos[v] = radius * p.normalized();
	}
	for (int e = 0; e < m.num_edges(); ++e)
		m.base_measure[1][e] = (pos[m.corners[1][e][1]] - pos[m.corners[1][e][0]]).norm();
	for (int p = 0; p < m.num_plaquettes(); ++p) {
		const auto &q = m.corners[2][p];
		Eigen::Vector3d d1 = pos[q[3]] - pos[q[0]], d2 = pos[q[2]] - pos[q[1]];
		m.base_measure[2][p] = 0.5 * d1.cross(d2).norm();
	}
	m.coords.clear();
	m.generator = "cubed_sphere";
	return m;
}

/// Square disk [0, n]^2 with the given edge length.
inline Mesh disk(int n, double edge)
{
	Mesh m = cube(2, n, edge);
	m.generator = "disk";
	return m;
}

/// Adds the collar record of a product N x interval(levels, a, b).
inline void attach_cylinder_collar(Mesh &m, int slice_vertices, int levels, double a, double b, const std::string &region)
{
	Collar col;
	col.region = region;
	for (int k = 0; k <= levels; ++k) {
		col.t.push_back(a + (b - a) * k / levels);
		std::vector<int> layer(slice_vertices);
		for (int s = 0; s < slice_vertices; ++s)
			layer[s] = s + slice_vertices * k;
		col.layers.push_back(std::move(layer));
	}
	std::vector<int> all(m.num_top());
	std::iota(all.begin(), all.end(), 0);
	m.regions[region] = all;
	m.collar = std::move(col);
	m.finalize();
}

/// Cylinder N x [a, b] with `levels` segments; the whole mesh is a collar.
inline Mesh cylinder(const Mesh &slice, int levels, double a, double b)
{
	Mesh m = product(slice, interval(levels, a, b));
	m.generator = "cylinder";
	attach_cylinder_collar(m, slice.num_vertices, levels, a, b, "collar");
	return m;
}

namespace detail {

/// Position of vertex (i, j) of the square [0, k]^2 along its boundary
/// cycle, counter-clockwise from the origin; -1 for interior vertices.
inline int square_cycle_index(int k, int v)
{
	int i = v % (k + 1), j = v / (k + 1);
	if (j == 0)
		return i;
	if (i == k)
		return k + j;
	if (j == k)
		return 3 * k - i;
	if (i == 0)
		return 4 * k - j;
	return -1;
}

} // namespace detail

/// Sphere with a long neck: two square disks [0, n]^2 capping the ends of a
/// cylinder S^1 x [0, levels * edge] whose circle is the disk boundary.
inline Mesh capped_cylinder(int n, int levels, double edge)
{
	require(n >= 1 && levels >= 1, ErrorKind::config, "capped cylinder needs n >= 1 and levels >= 1");
	Mesh d = disk(n, edge);
	Mesh tube = cylinder(circle(4 * n, 4 * n * edge), levels, 0.0, levels * edge);
	MeshBuilder mb(2);
	int o1 = mb.add_mesh(d, true, "", {"cap"});
	int o2 = mb.add_mesh(tube, false, "", {"neck"});
	int o3 = mb.add_mesh(d, false, "", {"cap"});
	const int ring = 4 * n;
	for (int v = 0; v < d.num_vertices; ++v) {
		int pos = detail::square_cycle_index(n, v);
		if (pos < 0)
			continue;
		mb.identify(o1 + v, o2 + pos);
		mb.identify(o3 + v, o2 + ring * levels + pos);
	}
	Mesh m = mb.build(Orient::propagate).mesh;
	m.regions.erase("collar");
	m.generator = "capped_cylinder";
	return m;
}

/// Round sphere S^p (p in {0, 1, 2}) at resolution n with unit-ish edges.
inline Mesh sphere(int p, int n, double edge = 1.0)
{
	if (p == 0)
		return point_pair();
	if (p == 1)
		return circle(std::max(n, min_periodic_resolution), n * edge);
	return cube_sphere(p + 1, n, edge);
}

/// S^p x D^q with n cells along each disk side.
inline Mesh handle_region(int p, int q, int n, double edge = 1.0)
{
	require(p + q >= 1, ErrorKind::config, "handle dimension must be positive");
	Mesh d = cube(q, n, edge);
	if (p == 0)
		return disjoint_union(d, d);
	Mesh m = product(sphere(p, std::max(n, min_periodic_resolution), edge), d);
	m.generator = "sphere_x_disk";
	return m;
}

/// D^{p+1} x S^{q-1} with n cells along each disk side.
inline Mesh handle(int p, int q, int n, double edge = 1.0)
{
	require(q >= 1, ErrorKind::config, "handle needs q >= 1");
	Mesh d = cube(p + 1, n, edge);
	if (q == 1)
		return disjoint_union(d, d);
	Mesh m = product(d, cube_sphere(q, n, edge));
	m.generator = "disk_x_sphere";
	return m;
}

/// S^1 x S^1 x S^2 with square tori of side `side` and a cubed sphere.
inline Mesh torus_x_sphere(int n, double side, double radius)
{
	Mesh m = product(torus(2, n, side), cubed_sphere(std::max(2, n / 2), radius));
	m.generator = "torus_x_sphere";
	return m;
}

} // namespace karea
