// cli.hpp -- command-line front end (score / calibrate / route / simulate).
//
// dispatch() is the whole program minus main(): it parses args, runs one
// subcommand and reports through the returned exit code.  Keeping it in the
// library lets tests drive the real command paths in-process.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pacr::cli {

inline constexpr int kOk = 0;
inline constexpr int kInfeasible = 2;  // calibration found no feasible threshold
inline constexpr int kTransport = 3;   // endpoint unreachable or item-level failures
inline constexpr int kConfig = 4;      // bad flags, bad config files, bad data

// args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pacr::cli
