#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "gspot/error.hpp"
#include "gspot/version.hpp"

namespace gspot::cli {

namespace {

void add_json(CLI::App* cmd, bool& flag) {
  cmd->add_flag("--json", flag, "Print machine-readable JSON instead of a table");
}

void add_hand(CLI::App* cmd, std::string& hand) {
  cmd->add_option("--hand", hand, "Hands to analyze")
      ->check(CLI::IsMember({"left", "right", "both"}))
      ->capture_default_str();
}

void write_manifest(const Manifest& m, double seconds) {
  if (m.path.empty()) return;
  std::ofstream f(m.path, std::ios::trunc);
  if (!f) throw IoError("cannot write manifest " + m.path.string());
  f << manifest_json(m, seconds);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Background activity capture, gesture spotting and evaluation toolkit", "gspot"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic session with ground truth");
  c_synth->add_option("--config", synth.config, "key = value synthesis config");
  c_synth->add_option("--seed", synth.seed, "Random seed (overrides the config)");
  c_synth->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train gesture HMMs and write a spotting network");
  c_train->add_option("--session", train.sessions, "Session file (.bgac), repeatable")->required();
  c_train->add_option("--annotations", train.annotations, "Annotation file, one per session")->required();
  c_train->add_option("--gestures", train.gestures, "Gestures to train (default: all annotated)")
      ->delimiter(',');
  c_train->add_option("--config", train.config, "key = value feature/training config");
  c_train->add_option("--seed", train.seed, "Seed for the held-out split and training");
  c_train->add_option("--states", train.states, "States per gesture model (default 4)");
  add_hand(c_train, train.hand);
  c_train->add_option("--out", train.out, "Network file (.gsn)")->required();
  add_json(c_train, train.json);

  SpotArgs spot;
  auto* c_spot = app.add_subcommand("spot", "Run a spotting network over a session");
  c_spot->add_option("--network", spot.network, "Network file (.gsn)")->required();
  c_spot->add_option("--session", spot.session, "Session file (.bgac)")->required();
  c_spot->add_option("--config", spot.config, "Feature config; must match the network");
  add_hand(c_spot, spot.hand);
  c_spot->add_option("--out", spot.out, "Detections file (default: stdout)");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Score detections against annotations");
  c_eval->add_option("--detections", eval.detections, "Detections JSON")->required();
  c_eval->add_option("--annotations", eval.annotations, "Annotation JSON")->required();
  c_eval->add_option("--session", eval.session, "Session file for person-time normalization");
  c_eval->add_option("--window-ms", eval.window_ms, "Matching window after a truth interval")
      ->capture_default_str();
  c_eval->add_option("--out", eval.out, "Report file (JSON)");
  add_json(c_eval, eval.json);

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Compare false positives of two gesture sets");
  c_cmp->add_option("--network-a", cmp.network_a, "Network file for set A")->required();
  c_cmp->add_option("--network-b", cmp.network_b, "Network file for set B")->required();
  c_cmp->add_option("--gestures-a", cmp.gestures_a, "Restrict set A to these gestures")->delimiter(',');
  c_cmp->add_option("--gestures-b", cmp.gestures_b, "Restrict set B to these gestures")->delimiter(',');
  c_cmp->add_option("--session", cmp.session, "Background session (.bgac)")->required();
  c_cmp->add_option("--annotations", cmp.annotations, "Ground truth; matched detections are not counted");
  add_hand(c_cmp, cmp.hand);
  c_cmp->add_option("--out", cmp.out, "Report file (JSON)");
  add_json(c_cmp, cmp.json);

  StillArgs still;
  auto* c_still = app.add_subcommand("stillframes", "Find intervals without depth motion");
  c_still->add_option("--session", still.session, "Session file (.bgac)")->required();
  c_still->add_option("--threshold-mm", still.threshold_mm, "Mean absolute per-pixel difference")
      ->capture_default_str();
  c_still->add_option("--min-seconds", still.min_seconds, "Minimum interval length")->capture_default_str();
  c_still->add_option("--out", still.out, "Output directory (JSON + representative frames)");
  add_json(c_still, still.json);

  ZonesArgs zones;
  auto* c_zones = app.add_subcommand("zones", "Occupancy maps and gesture zone");
  c_zones->add_option("--session", zones.session, "Session file (.bgac)")->required();
  c_zones->add_option("--annotations", zones.annotations, "Annotation JSON")->required();
  c_zones->add_option("--gesture", zones.gesture, "Only this gesture's intervals");
  c_zones->add_option("--out", zones.out, "Output directory for PGM maps")->required();
  add_json(c_zones, zones.json);

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect", "Header and frame-rate statistics of a session");
  c_inspect->add_option("--session", inspect.session, "Session file (.bgac)")->required();
  c_inspect->add_option("--out", inspect.out, "Write the JSON summary here");
  add_json(c_inspect, inspect.json);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Context ctx{out, err, {}};
  ctx.manifest.arguments = args;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (c_synth->parsed()) {
      ctx.manifest.subcommand = "synth";
      cmd_synth(synth, ctx);
    } else if (c_train->parsed()) {
      ctx.manifest.subcommand = "train";
      cmd_train(train, ctx);
    } else if (c_spot->parsed()) {
      ctx.manifest.subcommand = "spot";
      cmd_spot(spot, ctx);
    } else if (c_eval->parsed()) {
      ctx.manifest.subcommand = "eval";
      cmd_eval(eval, ctx);
    } else if (c_cmp->parsed()) {
      ctx.manifest.subcommand = "compare";
      cmd_compare(cmp, ctx);
    } else if (c_still->parsed()) {
      ctx.manifest.subcommand = "stillframes";
      cmd_stillframes(still, ctx);
    } else if (c_zones->parsed()) {
      ctx.manifest.subcommand = "zones";
      cmd_zones(zones, ctx);
    } else if (c_inspect->parsed()) {
      ctx.manifest.subcommand = "inspect";
      cmd_inspect(inspect, ctx);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(ctx.manifest, secs);
  } catch (const CorruptStreamError& e) {
    err << "gspot: corrupt data: " << e.what() << "\n";
    return kExitCorrupt;
  } catch (const Error& e) {
    err << "gspot: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "gspot: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "gspot: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace gspot::cli
