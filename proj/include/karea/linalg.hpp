#pragma once

// Small dense complex matrices: unitary exp/log, norms, and the summation and
// parallel-map helpers shared by every evaluation module.

#include "karea/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

namespace karea {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Default distance from -1 below which a holonomy eigenvalue is rejected.
inline constexpr double branch_cut_guard = 1e-6;

inline Mat identity(int r) { return Mat::Identity(r, r); }

/// Inverse of a unitary matrix.
inline Mat inv_unitary(const Mat &u) { return u.adjoint(); }

inline Mat antiherm_part(const Mat &a) { return 0.5 * (a - a.adjoint()); }
inline Mat herm_part(const Mat &a) { return 0.5 * (a + a.adjoint()); }

/// Eigenvalues of a normal matrix (unitary in practice).
inline Eigen::VectorXcd normal_eigenvalues(const Mat &u)
{
	if (u.rows() == 1)
		return u.diagonal();
	Eigen::ComplexSchur<Mat> schur(u, false);
	return schur.matrixT().diagonal();
}

/// Smallest |lambda + 1| over the spectrum of u.
inline double branch_distance(const Mat &u)
{
	auto ev = normal_eigenvalues(u);
	double d = std::abs(ev(0) + 1.0);
	for (int i = 1; i < ev.size(); ++i)
		d = std::min(d, std::abs(ev(i) + 1.0));
	return d;
}

/// Principal logarithm of a unitary matrix; the result is anti-Hermitian.
/// Throws BranchCutError (tagged with `cell`) if an eigenvalue is within
/// `guard` of -1.
inline Mat log_unitary(const Mat &u, int cell = -1, double guard = branch_cut_guard)
{
	const int r = static_cast<int>(u.rows());
	if (r == 1) {
		cplx z = u(0, 0);
		double d = std::abs(z + 1.0);
		if (d < guard)
			throw BranchCutError(cell, d);
		Mat out(1, 1);
		out(0, 0) = cplx(0.0, std::arg(z));
		return out;
	}
	Eigen::ComplexSchur<Mat> schur(u);
	const Mat &t = schur.matrixT();
	const Mat &q = schur.matrixU();
	Eigen::VectorXcd ang(r);
	for (int i = 0; i < r; ++i) {
		cplx z = t(i, i);
		double d = std::abs(z + 1.0);
		if (d < guard)
			throw BranchCutError(cell, d);
		ang(i) = cplx(0.0, std::arg(z));
	}
	return antiherm_part(q * ang.asDiagonal() * q.adjoint());
}

/// Exponential of an anti-Hermitian matrix, unitary to rounding.
inline Mat exp_antiherm(const Mat &x)
{
	const int r = static_cast<int>(x.rows());
	if (r == 1) {
		Mat out(1, 1);
		out(0, 0) = std::polar(1.0, x(0, 0).imag());
		return out;
	}
	// x = i h with h Hermitian
	Mat h = herm_part(cplx(0.0, -1.0) * x);
	Eigen::SelfAdjointEigenSolver<Mat> es(h);
	Eigen::VectorXcd ph(r);
	for (int i = 0; i < r; ++i)
		ph(i) = std::polar(1.0, es.eigenvalues()(i));
	return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

/// Operator norm of an anti-Hermitian (or Hermitian) matrix.
inline double norm_normal(const Mat &x)
{
	if (x.rows() == 1)
		return std::abs(x(0, 0));
	Eigen::SelfAdjointEigenSolver<Mat> es(herm_part(cplx(0.0, -1.0) * x), Eigen::EigenvaluesOnly);
	return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Operator norm of an arbitrary matrix.
inline double norm_op(const Mat &a)
{
	if (a.rows() == 1)
		return std::abs(a(0, 0));
	Eigen::JacobiSVD<Mat> svd(a);
	return svd.singularValues()(0);
}

/// ||u - I|| in operator norm for a unitary u.
inline double dist_identity(const Mat &u)
{
	if (u.rows() == 1)
		return std::abs(u(0, 0) - 1.0);
	auto ev = normal_eigenvalues(u);
	double d = 0.0;
	for (int i = 0; i < ev.size(); ++i)
		d = std::max(d, std::abs(ev(i) - 1.0));
	return d;
}

inline double unitarity_defect(const Mat &u)
{
	return norm_op(u.adjoint() * u - identity(static_cast<int>(u.rows())));
}

inline Mat kron(const Mat &a, const Mat &b)
{
	Mat out(a.rows() * b.rows(), a.cols() * b.cols());
	for (int i = 0; i < a.rows(); ++i)
		for (int j = 0; j < a.cols(); ++j)
			out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
	return out;
}

/// Gaussian anti-Hermitian matrix (GUE times i).
template <class Rng> Mat random_antiherm(int r, Rng &rng)
{
	std::normal_distribution<double> g(0.0, 1.0);
	Mat a(r, r);
	for (int i = 0; i < r; ++i) {
		a(i, i) = cplx(0.0, g(rng));
		for (int j = i + 1; j < r; ++j) {
			double re = g(rng), im = g(rng);
			a(i, j) = cplx(re, im) / std::sqrt(2.0);
			a(j, i) = -std::conj(a(i, j));
		}
	}
	return a;
}

template <class Rng> Mat random_unitary(int r, Rng &rng)
{
	std::uniform_real_distribution<double> u(0.0, 1.0);
	Mat x = random_antiherm(r, rng);
	double n = norm_normal(x);
	// spread the spectrum over the whole circle but stay off the branch cut
	return exp_antiherm(x * ((0.9 * pi * u(rng)) / std::max(n, 1e-300)));
}

/// Neumaier compensated summation. Adding terms in a fixed order makes the
/// result reproducible independent of how the terms were computed.
class CompensatedSum {
  public:
	void add(double x)
	{
		double t = sum_ + x;
		if (std::abs(sum_) >= std::abs(x))
			c_ += (sum_ - t) + x;
		else
			c_ += (x - t) + sum_;
		sum_ = t;
	}
	double value() const { return sum_ + c_; }

  private:
	double sum_ = 0.0;
	double c_ = 0.0;
};

inline double compensated_sum(const std::vector<double> &xs)
{
	CompensatedSum s;
	for (double x : xs)
		s.add(x);
	return s.value();
}

inline std::atomic<int> &thread_limit()
{
	static std::atomic<int> n{1};
	return n;
}

inline void set_threads(int n) { thread_limit() = std::max(1, n); }

/// Runs fn(i) for i in [0, n). Each index must write only its own output
/// slot; the partition never affects results.
template <class F> void parallel_for(int n, F &&fn)
{
	int nt = std::min(thread_limit().load(), std::max(1, n / 64));
	if (nt <= 1) {
		for (int i = 0; i < n; ++i)
			fn(i);
		return;
	}
	std::vector<std::thread> pool;
	std::vector<std::exception_ptr> errors(nt);
	pool.reserve(nt);
	for (int t = 0; t < nt; ++t) {
		int lo = static_cast<int>(static_cast<long>(n) * t / nt);
		int hi = static_cast<int>(static_cast<long>(n) * (t + 1) / nt);
		pool.emplace_back([lo, hi, &fn, &err = errors[t]] {
			try {
				for (int i = lo; i < hi; ++i)
					fn(i);
			} catch (...) {
				err = std::current_exception();
			}
		});
	}
	for (auto &th : pool)
		th.join();
	// the lowest failing chunk wins, matching the serial order
	for (auto &e : errors)
		if (e)
			std::rethrow_exception(e);
}

} // namespace karea
