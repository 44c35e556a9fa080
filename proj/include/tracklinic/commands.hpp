#pragma once

// Pipeline commands behind the command-line tool. Each command computes all
// of its results in memory before writing anything, and every file is
// written atomically.

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "tracklinic/annotation.hpp"
#include "tracklinic/core.hpp"
#include "tracklinic/evaluation.hpp"
#include "tracklinic/extraction.hpp"
#include "tracklinic/io.hpp"
#include "tracklinic/parallel.hpp"
#include "tracklinic/report.hpp"
#include "tracklinic/simulator.hpp"

namespace tracklinic::cmd {

namespace fs = std::filesystem;

struct Options {
  fs::path out = "tracklinic_out";
  DiagnosisConfig config;
  int jobs = 1;
  std::vector<std::string> trackers;  // empty: every tracker found
  std::uint64_t seed = 42;
  std::ostream* log = nullptr;
};

namespace detail {

inline void note(const Options& o, const std::string& msg) {
  if (o.log) *o.log << msg << "\n";
}

inline void refuse_overwrite(const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  std::set<fs::path> in;
  for (const fs::path& p : inputs) in.insert(fs::weakly_canonical(p));
  for (const fs::path& p : outputs) {
    if (in.contains(fs::weakly_canonical(p))) {
      throw UsageError("output '" + p.string() + "' would overwrite an input; choose another --out");
    }
  }
}

// Guards the stale-output cleanup of `dir` against deleting an input.
inline void refuse_clearing(const std::vector<fs::path>& inputs, const fs::path& dir) {
  const fs::path d = fs::weakly_canonical(dir);
  for (const fs::path& p : inputs) {
    const fs::path c = fs::weakly_canonical(p);
    const auto [it, _] = std::mismatch(d.begin(), d.end(), c.begin(), c.end());
    if (it == d.end()) {
      throw UsageError("input '" + p.string() + "' lies inside '" + dir.string() +
                       "', which this command clears; choose another --out");
    }
  }
}

inline std::vector<fs::path> manifest_inputs(const fs::path& manifest) {
  std::vector<fs::path> inputs{manifest};
  for (const auto& e : io::parse_manifest(manifest)) {
    inputs.push_back(e.groundtruth);
    inputs.push_back(e.annotation);
  }
  return inputs;
}

inline std::vector<SequenceRecord> load_manifest_sequences(const fs::path& manifest, const Options& o) {
  const auto entries = io::parse_manifest(manifest);
  return parallel_map(entries.size(), o.jobs, [&](std::size_t i) {
    return io::load_sequence(entries[i].sequence_id, entries[i].groundtruth, entries[i].annotation);
  });
}

inline SequenceRecord finalize_labels(const SequenceRecord& raw, const DiagnosisConfig& cfg) {
  for (const FrameLabels& fl : raw.labels) {
    if (fl.active.has_compound()) {
      throw DataError("sequence '" + raw.sequence_id + "' frame " + std::to_string(fl.frame_index) +
                      " already has compound labels; annotate runs once, on raw simple-factor files");
    }
  }
  SequenceRecord seq = derive_compound_factors(annotate_shape_variation(raw, cfg), cfg);
  if (const auto v = validate_labels(seq); !v.empty()) {
    throw DataError("sequence '" + seq.sequence_id + "' frame " + std::to_string(v.front().frame) + ": " +
                    v.front().message);
  }
  return seq;
}

struct ExtractedCorpus {
  std::vector<ExtractedClip> clips;
  std::vector<ExtractionWarning> warnings;
};

inline ExtractedCorpus extract_corpus(const std::vector<SequenceRecord>& seqs, const Options& o) {
  struct PerSeq {
    std::vector<ExtractedClip> clips;
    std::vector<ExtractionWarning> warnings;
  };
  auto parts = parallel_map(seqs.size(), o.jobs, [&](std::size_t i) {
    PerSeq p;
    p.clips = extract_clips(seqs[i], o.config, &p.warnings);
    return p;
  });
  ExtractedCorpus c;
  for (PerSeq& p : parts) {
    for (ExtractedClip& clip : p.clips) c.clips.push_back(std::move(clip));
    for (ExtractionWarning& w : p.warnings) c.warnings.push_back(std::move(w));
  }
  sort_clips(c.clips);
  for (const ExtractedClip& clip : c.clips) {
    if (const auto bad = check_clip_invariants(clip, o.config); !bad.empty()) {
      throw std::logic_error("extracted clip failed its invariant audit: " + bad.front());
    }
  }
  return c;
}

}  // namespace detail

struct AnnotateSummary {
  std::size_t sequences = 0;
  std::size_t sv_frames = 0;
  std::size_t compound_frames = 0;
};

// Adds shape variation and compound factors; writes finalized annotation
// files, normalized groundtruth copies and a manifest under opts.out.
inline AnnotateSummary cmd_annotate(const fs::path& manifest, const Options& o) {
  const auto entries = io::parse_manifest(manifest);
  std::vector<fs::path> inputs{manifest}, outputs{o.out / "manifest.csv"};
  for (const auto& e : entries) {
    inputs.push_back(e.groundtruth);
    inputs.push_back(e.annotation);
    outputs.push_back(o.out / (e.sequence_id + ".gt.txt"));
    outputs.push_back(o.out / (e.sequence_id + ".labels.csv"));
  }
  detail::refuse_overwrite(inputs, outputs);

  const auto raw = detail::load_manifest_sequences(manifest, o);
  const auto done = parallel_map(raw.size(), o.jobs,
                                 [&](std::size_t i) { return detail::finalize_labels(raw[i], o.config); });

  AnnotateSummary s;
  std::vector<std::string> ids;
  for (const SequenceRecord& seq : done) {
    ++s.sequences;
    for (const FrameLabels& fl : seq.labels) {
      s.sv_frames += fl.active.contains(FactorKind::SV) ? 1 : 0;
      s.compound_frames += fl.active.has_compound() ? 1 : 0;
    }
    io::write_file_atomic(o.out / (seq.sequence_id + ".gt.txt"), io::format_boxes(seq.groundtruth));
    io::write_file_atomic(o.out / (seq.sequence_id + ".labels.csv"), io::format_annotations(seq.labels));
    ids.push_back(seq.sequence_id);
  }
  io::write_file_atomic(o.out / "manifest.csv", io::format_manifest(ids));
  detail::note(o, "annotated " + std::to_string(s.sequences) + " sequence(s): " +
                      std::to_string(s.sv_frames) + " SV frame(s), " + std::to_string(s.compound_frames) +
                      " compound frame(s)");
  return s;
}

// Writes <out>/clips/<clip_id>/ for every clip plus <out>/census.json.
inline CorpusSummary cmd_extract(const fs::path& manifest, const Options& o) {
  const auto inputs = detail::manifest_inputs(manifest);
  detail::refuse_overwrite(inputs, {o.out / "census.json"});
  detail::refuse_clearing(inputs, o.out / "clips");
  const auto seqs = detail::load_manifest_sequences(manifest, o);
  for (const SequenceRecord& seq : seqs) {
    if (const auto v = validate_labels(seq); !v.empty()) {
      throw DataError("sequence '" + seq.sequence_id + "' has " + std::to_string(v.size()) +
                      " label violation(s); first at frame " + std::to_string(v.front().frame) + ": " +
                      v.front().message);
    }
  }
  const auto corpus = detail::extract_corpus(seqs, o);
  for (const ExtractionWarning& w : corpus.warnings) {
    detail::note(o, "warning: " + w.source_id + " " + std::string(factor_name(w.factor)) + " [" +
                        std::to_string(w.run.start) + "," + std::to_string(w.run.end) + "]: " + w.message);
  }
  const CorpusSummary summary = summarize_corpus(corpus.clips);

  const fs::path clips_dir = o.out / "clips";
  if (fs::exists(clips_dir)) fs::remove_all(clips_dir);
  for (const ExtractedClip& clip : corpus.clips) io::write_clip(clips_dir / clip.clip_id, clip);
  io::write_file_atomic(o.out / "census.json", corpus_to_json(summary).dump(2) + "\n");
  detail::note(o, "extracted " + std::to_string(summary.total_clips) + " clip(s), " +
                      std::to_string(summary.total_frames) + " frame(s)");
  return summary;
}

inline std::vector<std::string> list_trackers(const fs::path& results_dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(results_dir)) {
    if (e.is_directory()) names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

// Writes <out>/<tracker>.outcomes.json per tracker and <out>/corpus.json.
inline std::map<std::string, std::vector<ClipOutcome>> cmd_evaluate(const fs::path& clips_dir,
                                                                    const fs::path& results_dir,
                                                                    const Options& o) {
  const auto clips = io::load_clips(clips_dir);
  if (!fs::is_directory(results_dir)) throw DataError("results directory not found: '" + results_dir.string() + "'");
  const auto trackers = o.trackers.empty() ? list_trackers(results_dir) : o.trackers;
  if (trackers.empty()) throw UsageError("no trackers given and none found under '" + results_dir.string() + "'");

  for (const std::string& t : trackers) {
    std::vector<std::string> missing;
    for (const ExtractedClip& c : clips) {
      if (!fs::exists(results_dir / t / (c.clip_id + ".txt"))) missing.push_back(c.clip_id);
    }
    if (!missing.empty()) {
      std::string msg = "tracker '" + t + "': missing result file(s) for " + std::to_string(missing.size()) +
                        " clip(s):";
      for (const std::string& id : missing) msg += " " + id;
      throw DataError(msg);
    }
  }

  const std::size_t nc = clips.size();
  const auto flat = parallel_map(trackers.size() * nc, o.jobs, [&](std::size_t k) {
    const std::string& t = trackers[k / nc];
    const ExtractedClip& clip = clips[k % nc];
    const fs::path p = results_dir / t / (clip.clip_id + ".txt");
    TrackerRun run{t, clip.clip_id, io::parse_boxes(io::read_file(p), p.string())};
    if (run.predictions.size() != clip.length()) {
      throw DataError(p.string() + ": " + std::to_string(run.predictions.size()) + " frame(s), clip '" +
                      clip.clip_id + "' has " + std::to_string(clip.length()));
    }
    return evaluate_clip(clip, run, o.config);
  });

  std::map<std::string, std::vector<ClipOutcome>> by_tracker;
  for (std::size_t k = 0; k < flat.size(); ++k) by_tracker[trackers[k / nc]].push_back(flat[k]);
  for (const auto& [t, outs] : by_tracker) {
    io::write_file_atomic(o.out / (t + ".outcomes.json"), io::format_outcomes(t, outs));
  }
  io::write_file_atomic(o.out / "corpus.json", corpus_to_json(summarize_corpus(clips)).dump(2) + "\n");
  detail::note(o, "evaluated " + std::to_string(trackers.size()) + " tracker(s) on " + std::to_string(nc) +
                      " clip(s)");
  return by_tracker;
}

// Reads corpus.json and *.outcomes.json from each directory; writes
// report.tkreport.json, report.md and the SVG charts under opts.out.
inline DiagnosisReport cmd_report(const std::vector<fs::path>& outcome_dirs, const Options& o) {
  if (outcome_dirs.empty()) throw UsageError("report needs at least one outcomes directory");
  std::optional<CorpusSummary> corpus;
  std::map<std::string, std::vector<ClipOutcome>> outcomes;
  for (const fs::path& dir : outcome_dirs) {
    const fs::path cp = dir / "corpus.json";
    CorpusSummary c;
    try {
      c = corpus_from_json(json::parse(io::read_file(cp)));
    } catch (const json::exception& e) {
      throw DataError(cp.string() + ": " + e.what());
    }
    if (corpus && !(*corpus == c)) {
      throw DataError("'" + dir.string() + "' was evaluated on a different clip corpus");
    }
    corpus = std::move(c);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.size() > 14 && name.ends_with(".outcomes.json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      auto [tracker, list] = io::parse_outcomes(io::read_file(f), f.string());
      if (!o.trackers.empty() &&
          std::find(o.trackers.begin(), o.trackers.end(), tracker) == o.trackers.end()) {
        continue;
      }
      if (!outcomes.emplace(tracker, std::move(list)).second) {
        throw DataError("tracker '" + tracker + "' appears in more than one outcome file");
      }
    }
  }

  const DiagnosisReport report = build_report(*corpus, outcomes, o.config);
  const HumanReport human = render_human(report);
  io::write_file_atomic(o.out / "report.tkreport.json", render_structured(report));
  io::write_file_atomic(o.out / "report.md", human.markdown);
  for (const ChartFile& c : human.charts) io::write_file_atomic(o.out / c.filename, c.svg);
  detail::note(o, "report for " + std::to_string(report.trackers.size()) + " tracker(s) written to " +
                      o.out.string());
  return report;
}

inline std::vector<sim::SimProfile> default_profiles(std::uint64_t seed) {
  auto make = [&](std::string name, double drift, std::array<double, kFactorCount> p) {
    sim::SimProfile prof;
    prof.seed = seed ^ sim::fnv1a64(name);
    prof.name = std::move(name);
    prof.drift = drift;
    prof.failure_probability = p;
    return prof;
  };
  //                 OCC   ROT   OV    BC    IV    MB    SV    O-B   O-R
  return {make("alpha", 4.0, {0.20, 0.15, 0.70, 0.25, 0.05, 0.20, 0.45, 0.40, 0.45}),
          make("beta", 6.0, {0.30, 0.25, 0.85, 0.35, 0.10, 0.30, 0.60, 0.55, 0.60})};
}

inline constexpr std::size_t kDemoSequences = 120;

struct SimulateSummary {
  std::size_t sequences = 0;
  std::size_t clips = 0;
  std::vector<std::string> trackers;
};

// Writes <out>/corpus/ (raw annotations, groundtruth, manifest, layout echo)
// and <out>/results/<tracker>/<clip_id>.txt for every synthetic tracker.
inline SimulateSummary cmd_simulate(const std::optional<fs::path>& layout_path,
                                    const std::optional<fs::path>& profile_path, const Options& o) {
  std::vector<fs::path> inputs;
  if (layout_path) inputs.push_back(*layout_path);
  if (profile_path) inputs.push_back(*profile_path);
  detail::refuse_clearing(inputs, o.out / "results");
  detail::refuse_clearing(inputs, o.out / "corpus");

  const auto layouts = layout_path ? io::parse_layouts(io::read_file(*layout_path), layout_path->string())
                                   : sim::demo_layouts(o.seed, kDemoSequences);
  const auto profiles = profile_path ? io::parse_profiles(io::read_file(*profile_path), profile_path->string())
                                     : default_profiles(o.seed);

  const auto seqs =
      parallel_map(layouts.size(), o.jobs, [&](std::size_t i) { return sim::synth_sequence(layouts[i], o.seed); });
  const auto finalized = parallel_map(seqs.size(), o.jobs,
                                      [&](std::size_t i) { return detail::finalize_labels(seqs[i], o.config); });
  const auto corpus = detail::extract_corpus(finalized, o);

  const std::size_t nc = corpus.clips.size();
  const auto runs = parallel_map(profiles.size() * nc, o.jobs, [&](std::size_t k) {
    return sim::synth_tracker_run(corpus.clips[k % nc], profiles[k / nc]);
  });

  const fs::path corpus_dir = o.out / "corpus";
  std::vector<std::string> ids;
  for (const SequenceRecord& seq : seqs) {
    io::write_file_atomic(corpus_dir / (seq.sequence_id + ".gt.txt"), io::format_boxes(seq.groundtruth));
    io::write_file_atomic(corpus_dir / (seq.sequence_id + ".labels.csv"), io::format_annotations(seq.labels));
    ids.push_back(seq.sequence_id);
  }
  io::write_file_atomic(corpus_dir / "manifest.csv", io::format_manifest(ids));
  io::write_file_atomic(corpus_dir / "layout.csv", io::format_layouts(layouts));
  const fs::path results_dir = o.out / "results";
  if (fs::exists(results_dir)) fs::remove_all(results_dir);
  for (const TrackerRun& run : runs) {
    io::write_file_atomic(results_dir / run.tracker_name / (run.clip_id + ".txt"), io::format_boxes(run.predictions));
  }

  SimulateSummary s{seqs.size(), nc, {}};
  for (const auto& p : profiles) s.trackers.push_back(p.name);
  detail::note(o, "simulated " + std::to_string(s.sequences) + " sequence(s), " + std::to_string(nc) +
                      " clip(s), " + std::to_string(profiles.size()) + " tracker(s)");
  return s;
}

}  // namespace tracklinic::cmd
