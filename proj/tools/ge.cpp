/*
 * Copyright 2026 The Grounded Explainer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// ge: command-line entry points.
//
//   ge simulate --config C --script S [--trace T]... [--seed N] --out O
//   ge detect   --trace T [--threshold F] [--window-ms N] [--baseline-ms N]
//   ge replay   --transcript R --config C --script S [--trace T]...
//   ge report   --transcript R
//   ge synth    --spec J --out T
//   ge serve    --config C [--bind HOST:PORT] [--store DIR]
//
// Exit codes: 0 ok, 1 divergence, 2 input error, 3 stream error,
// 4 session did not terminate.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ge/ge.hpp"
#include "ge/dialog_http.hpp"
#include "ge/service.hpp"

namespace {

enum Exit { kOk = 0, kDivergence = 1, kInputError = 2, kStreamError = 3, kNotTerminated = 4 };

struct SessionInputs {
  std::string config;
  std::string script;
  std::vector<std::string> traces;
};

struct Loaded {
  ge::SessionConfig config;
  ge::Script script;
  std::vector<ge::SampleStream> streams;
};

// Returns an exit code on failure.
std::variant<Loaded, int> load_inputs(const SessionInputs& in, std::optional<std::uint64_t> seed,
                                      int trace_failure_code) {
  Loaded out;
  try {
    out.config = ge::load_config(in.config);
    ge::apply_env_overrides(out.config);
    if (seed) out.config.seed = *seed;
    out.script = ge::load_script(in.script);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  try {
    out.streams = ge::load_traces(out.config, in.traces);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return trace_failure_code;
  }
  return out;
}

ge::SessionOutcome run(const Loaded& loaded) {
  auto client = ge::make_dialog_client(loaded.config.dialog_service_url,
                                       std::chrono::milliseconds(loaded.config.dialog_timeout_ms),
                                       loaded.config.dialog_retries);
  return ge::run_session(loaded.config, loaded.script, loaded.streams, std::move(client));
}

int cmd_simulate(const SessionInputs& in, std::optional<std::uint64_t> seed, const std::string& out_path) {
  auto loaded = load_inputs(in, seed, kStreamError);
  if (auto* code = std::get_if<int>(&loaded)) return *code;
  const auto outcome = run(std::get<Loaded>(loaded));
  try {
    ge::write_file(out_path, outcome.transcript.to_jsonl());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  if (!outcome.done) {
    std::cerr << "session did not terminate\n";
    return kNotTerminated;
  }
  return kOk;
}

int cmd_detect(const std::string& trace, const std::optional<std::string>& config_path, ge::DetectorConfig detector) {
  std::vector<ge::SourceDescriptor> sources;
  try {
    ge::validate(detector);
    if (config_path) {
      sources = ge::load_config(*config_path).sources;
    } else {
      for (const auto& id : ge::scan_trace_sources(trace))
        sources.push_back(ge::default_descriptor(id, ge::SourceKind::kExternalScalar));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  std::vector<ge::SampleStream> streams;
  try {
    for (auto& [id, s] : ge::read_trace(trace, sources, /*skip_unknown=*/config_path.has_value()))
      streams.push_back(std::move(s));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  const auto anomalies = ge::detect_merged(ge::merge_streams(streams), detector);
  for (const auto& a : anomalies) {
    ge::Json j(a);
    j["type"] = "anomaly";
    std::cout << j.dump() << "\n";
  }
  for (const auto& r : ge::fuse_reactions(anomalies, detector)) {
    ge::Json j(r);
    j["type"] = "reaction";
    std::cout << j.dump() << "\n";
  }
  return kOk;
}

int cmd_replay(const SessionInputs& in, const std::string& transcript_path) {
  std::string stored;
  try {
    stored = ge::read_file(transcript_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  auto loaded = load_inputs(in, std::nullopt, kInputError);
  if (auto* code = std::get_if<int>(&loaded)) return *code;
  const std::string fresh = run(std::get<Loaded>(loaded)).transcript.to_jsonl();
  if (fresh == stored) {
    std::cout << ge::Json{{"identical", true}}.dump() << "\n";
    return kOk;
  }
  // First differing line = first divergent seq.
  std::size_t seq = 0, a = 0, b = 0;
  while (true) {
    const auto ea = stored.find('\n', a), eb = fresh.find('\n', b);
    const auto la = stored.substr(a, ea == std::string::npos ? std::string::npos : ea - a);
    const auto lb = fresh.substr(b, eb == std::string::npos ? std::string::npos : eb - b);
    if (la != lb || ea == std::string::npos || eb == std::string::npos) break;
    a = ea + 1;
    b = eb + 1;
    ++seq;
  }
  std::cout << ge::Json{{"identical", false}, {"divergent_seq", seq}}.dump() << "\n";
  return kDivergence;
}

int cmd_report(const std::string& transcript_path) {
  try {
    std::cout << ge::summarize_transcript(ge::load_transcript(transcript_path)).dump() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}

int cmd_synth(const std::string& spec_path, const std::string& out_path, std::optional<std::uint64_t> seed) {
  try {
    auto spec = ge::parse_synth_spec(ge::Json::parse(ge::read_file(spec_path)));
    if (seed) spec.seed = *seed;
    ge::write_file(out_path, ge::format_trace(ge::synth_trace(spec)));
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}

ge::SessionServer* g_server = nullptr;

int cmd_serve(const std::string& config_path, std::string bind, const std::string& store) {
  try {
    if (const char* env = std::getenv("GE_BIND"); env && *env) bind = env;
    auto config = ge::load_config(config_path);
    ge::apply_env_overrides(config);
    auto [host, port] = ge::parse_bind(bind);
    ge::ServiceOptions options;
    options.address = host;
    options.port = port;
    options.store = store;
    ge::SessionServer server(std::move(config), options);
    std::cerr << "listening on " << host << ":" << server.port() << "\n";
    g_server = &server;
    std::signal(SIGINT, [](int) { std::_Exit(0); });
    server.run();
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-sensitive explanation sessions: simulation, detection, replay and service"};
  app.require_subcommand(1);

  SessionInputs inputs;
  std::optional<std::uint64_t> seed;
  std::string out, transcript;

  auto* simulate = app.add_subcommand("simulate", "Run a scripted session and write its transcript");
  simulate->add_option("--config", inputs.config, "Session config JSON")->required();
  simulate->add_option("--script", inputs.script, "Script of timed user events")->required();
  simulate->add_option("--trace", inputs.traces, "Signal trace CSV (repeatable)");
  simulate->add_option("--seed", seed, "Override the config seed");
  simulate->add_option("--out", out, "Transcript output path")->required();

  std::string trace;
  std::optional<std::string> detect_config;
  ge::DetectorConfig detector;
  auto* detect = app.add_subcommand("detect", "Print anomalies and reactions of a trace as JSON Lines");
  detect->add_option("--trace", trace, "Signal trace CSV")->required();
  detect->add_option("--threshold", detector.z_threshold, "Two-sided |z| threshold")->capture_default_str();
  detect->add_option("--window-ms", detector.detection_window_ms, "Reaction grouping window")->capture_default_str();
  detect->add_option("--baseline-ms", detector.baseline_span_ms, "Baseline span")->capture_default_str();
  detect->add_option("--refractory-ms", detector.refractory_ms, "Minimum spacing of reactions")->capture_default_str();
  detect->add_option("--min-baseline", detector.min_baseline_samples, "Warm-up sample count")->capture_default_str();
  detect->add_option("--config", detect_config, "Take source descriptors from a session config");

  auto* replay = app.add_subcommand("replay", "Re-run a session and compare with a stored transcript");
  replay->add_option("--transcript", transcript, "Stored transcript")->required();
  replay->add_option("--config", inputs.config, "Session config JSON")->required();
  replay->add_option("--script", inputs.script, "Script of timed user events")->required();
  replay->add_option("--trace", inputs.traces, "Signal trace CSV (repeatable)");

  auto* report = app.add_subcommand("report", "Summarize a transcript");
  report->add_option("--transcript", transcript, "Transcript JSONL")->required();

  std::string spec;
  auto* synth = app.add_subcommand("synth", "Write a synthetic trace from a JSON spec");
  synth->add_option("--spec", spec, "Synth spec JSON")->required();
  synth->add_option("--out", out, "Trace CSV output path")->required();
  synth->add_option("--seed", seed, "Override the spec seed");

  std::string bind = "127.0.0.1:8765", store = "transcripts";
  auto* serve = app.add_subcommand("serve", "Serve sessions over WebSocket");
  serve->add_option("--config", inputs.config, "Session config JSON")->required();
  serve->add_option("--bind", bind, "host:port (GE_BIND overrides)")->capture_default_str();
  serve->add_option("--store", store, "Transcript directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  if (*simulate) return cmd_simulate(inputs, seed, out);
  if (*detect) return cmd_detect(trace, detect_config, detector);
  if (*replay) return cmd_replay(inputs, transcript);
  if (*report) return cmd_report(transcript);
  if (*synth) return cmd_synth(spec, out, seed);
  if (*serve) return cmd_serve(inputs.config, bind, store);
  return kInputError;
}
