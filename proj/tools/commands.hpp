#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gspot::cli {

struct Manifest {
  std::string subcommand;
  std::vector<std::string> arguments;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path path;  // where the manifest goes; empty = no file output
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  Manifest manifest;
};

struct SynthArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct TrainArgs {
  std::vector<std::string> sessions;
  std::vector<std::string> annotations;
  std::vector<std::string> gestures;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> states;
  std::string hand = "both";
  std::string out;
  bool json = false;
};

struct SpotArgs {
  std::string network;
  std::string session;
  std::string config;
  std::string hand = "both";
  std::string out;
};

struct EvalArgs {
  std::string detections;
  std::string annotations;
  std::string session;
  double window_ms = 2000.0;
  std::string out;
  bool json = false;
};

struct CompareArgs {
  std::string network_a;
  std::string network_b;
  std::vector<std::string> gestures_a;
  std::vector<std::string> gestures_b;
  std::string session;
  std::string annotations;
  std::string hand = "both";
  std::string out;
  bool json = false;
};

struct StillArgs {
  std::string session;
  double threshold_mm = 8.0;
  double min_seconds = 5.0;
  std::string out;
  bool json = false;
};

struct ZonesArgs {
  std::string session;
  std::string annotations;
  std::string gesture;
  std::string out;
  bool json = false;
};

struct InspectArgs {
  std::string session;
  std::string out;
  bool json = false;
};

void cmd_synth(const SynthArgs& a, Context& ctx);
void cmd_train(const TrainArgs& a, Context& ctx);
void cmd_spot(const SpotArgs& a, Context& ctx);
void cmd_eval(const EvalArgs& a, Context& ctx);
void cmd_compare(const CompareArgs& a, Context& ctx);
void cmd_stillframes(const StillArgs& a, Context& ctx);
void cmd_zones(const ZonesArgs& a, Context& ctx);
void cmd_inspect(const InspectArgs& a, Context& ctx);

std::string manifest_json(const Manifest& m, double wall_clock_s);

}  // namespace gspot::cli
