#pragma once

#include <stdexcept>
#include <string>

namespace karea {

/// Category of a failure. The CLI maps these onto exit codes.
enum class ErrorKind {
	config,        // bad parameters, unsupported generator, mismatched inputs
	unsupported,   // operation not defined for this mesh type
	gluing,        // boundary complexes do not match
	plan,          // surgery region does not have the claimed shape
	precondition,  // caller skipped a required earlier step
	branch_cut,    // a holonomy eigenvalue sits on the log branch cut
	sector_escape, // optimizer could not stay inside its topological sector
	aggregate,     // every sub-run failed
	io,            // file or schema problems
};

inline const char *to_string(ErrorKind k)
{
	switch (k) {
	case ErrorKind::config: return "config";
	case ErrorKind::unsupported: return "unsupported";
	case ErrorKind::gluing: return "gluing";
	case ErrorKind::plan: return "plan";
	case ErrorKind::precondition: return "precondition";
	case ErrorKind::branch_cut: return "branch_cut";
	case ErrorKind::sector_escape: return "sector_escape";
	case ErrorKind::aggregate: return "aggregate";
	case ErrorKind::io: return "io";
	}
	return "unknown";
}

class Error : public std::runtime_error {
  public:
	Error(ErrorKind kind, const std::string &msg)
	    : std::runtime_error(std::string(to_string(kind)) + " error: " + msg), kind_(kind)
	{}
	ErrorKind kind() const noexcept { return kind_; }

  private:
	ErrorKind kind_;
};

/// Raised when a holonomy or edge transport has an eigenvalue too close to -1.
class BranchCutError : public Error {
  public:
	BranchCutError(int cell, double distance)
	    : Error(ErrorKind::branch_cut, "transport of cell " + std::to_string(cell) + " is within " +
	                                       std::to_string(distance) + " of the -1 branch cut"),
	      cell_(cell)
	{}
	int cell() const noexcept { return cell_; }

  private:
	int cell_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string &msg)
{
	if (!cond)
		fail(kind, msg);
}

} // namespace karea
