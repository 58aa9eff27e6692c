#pragma once

// Command-line front end. Every command takes its streams explicitly so tests
// can drive it in-process.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "orbitmart/group.hpp"

namespace orbitmart::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitRejected = 3;

/// Largest joint grid B^K accepted without a warning.
inline constexpr double kGridWarnCells = 1e6;

struct TestOptions {
  GroupSpec group = GroupSpec::full_permutation();
  std::string calibrator;  // empty picks the default for the dimension
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t joint = 1;
  bool stop_on_reject = false;
};

/// "power-mixture" for a single stream, "histkd:4:1" for joint ranks.
std::string default_calibrator(std::size_t joint);

/// ORBITMART_SEED when set and parseable, otherwise 0.
std::uint64_t default_seed();

/// One output line: n, r, theta, log10_wealth, rejected, degenerate, with
/// reals printed to 17 significant digits. Vectors are written for K > 1.
std::string format_record(std::uint64_t n, const std::vector<double>& r,
                          const std::vector<double>& theta, double log10_wealth, bool rejected,
                          bool degenerate);

/// Streams JSON records from `in`, writes one output record per line.
int cmd_test(const TestOptions& options, std::istream& in, std::ostream& out, std::ostream& err);

/// Recomputes log10_wealth from recorded output lines (their r fields only).
int cmd_replay(const std::string& calibrator, double alpha, std::size_t joint, std::istream& in,
               std::ostream& out, std::ostream& err);

int cmd_simulate(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                 unsigned threads, std::ostream& out, std::ostream& err);

int cmd_selfcheck(std::uint64_t seed, std::ostream& out);

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace orbitmart::cli
