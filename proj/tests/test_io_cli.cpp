#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "test_support.hpp"
#include "tracklinic/commands.hpp"

using namespace tracklinic;
using tracklinic::testing::Rng;
namespace fs = std::filesystem;

namespace {

const DiagnosisConfig kCfg;

// Fresh scratch directory per test.
class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("tracklinic_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& rel) const { return dir_ / rel; }

  void write(const std::string& rel, const std::string& text) const { io::write_file_atomic(path(rel), text); }

  cmd::Options opts(const std::string& out) const {
    cmd::Options o;
    o.out = path(out);
    o.jobs = 3;
    return o;
  }

  // Writes a raw (simple-factor) corpus for the given records.
  fs::path write_corpus(const std::string& rel, const std::vector<SequenceRecord>& seqs) const {
    std::vector<std::string> ids;
    for (const auto& s : seqs) {
      write(rel + "/" + s.sequence_id + ".gt.txt", io::format_boxes(s.groundtruth));
      write(rel + "/" + s.sequence_id + ".labels.csv", io::format_annotations(s.labels));
      ids.push_back(s.sequence_id);
    }
    write(rel + "/manifest.csv", io::format_manifest(ids));
    return path(rel + "/manifest.csv");
  }

  fs::path dir_;
};

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(TRACKLINIC_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(BoxFiles, AbsentMarkersAndDegenerateBoxes) {
  const auto boxes = io::parse_boxes("1,2,3,4\nabsent\n0,0,0,0\nABSENT\n5,5,-1,2\n", "t");
  ASSERT_EQ(boxes.size(), 5u);
  EXPECT_EQ(boxes[0], BoundingBox::present(1, 2, 3, 4));
  for (std::size_t i = 1; i < 5; ++i) EXPECT_TRUE(boxes[i].is_absent()) << i;
}

TEST(BoxFiles, SeparatorsAndLineEndings) {
  const auto boxes = io::parse_boxes("1\t2\t3\t4\r\n1 2 3 4\r\n1, 2, 3, 4", "t");
  ASSERT_EQ(boxes.size(), 3u);
  for (const auto& b : boxes) EXPECT_EQ(b, BoundingBox::present(1, 2, 3, 4));
}

TEST(BoxFiles, MalformedLinesAreDataErrors) {
  EXPECT_THROW(io::parse_boxes("1,2,3\n", "t"), DataError);
  EXPECT_THROW(io::parse_boxes("1,2,x,4\n", "t"), DataError);
}

TEST(BoxFiles, FormatParseRoundTrip) {
  Rng rng(4);
  std::vector<BoundingBox> boxes;
  for (int i = 0; i < 2000; ++i) {
    boxes.push_back(i % 7 == 0 ? BoundingBox::absent() : tracklinic::testing::random_box(rng));
  }
  EXPECT_EQ(io::parse_boxes(io::format_boxes(boxes), "t"), boxes);
}

TEST(AnnotationFiles, CompoundColumnsAreOptional) {
  const auto rows = io::parse_annotations("frame,occ,rot,ov,bc,iv,mb,sv\n0,0,0,0,0,1,0,0\n1,1,0,0,1,0,0,0\n", "t");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], FactorSet{FactorKind::IV});
  EXPECT_EQ(rows[1], (FactorSet{FactorKind::OCC, FactorKind::BC}));
}

TEST(AnnotationFiles, RejectsBadInput) {
  EXPECT_THROW(io::parse_annotations("frame,occ,rot,ov,bc,iv,mb\n", "t"), DataError);
  EXPECT_THROW(io::parse_annotations("frame,occ,rot,ov,bc,iv,mb,sv\n0,0,0,0,0,2,0,0\n", "t"), DataError);
  EXPECT_THROW(io::parse_annotations("frame,occ,rot,ov,bc,iv,mb,sv\n1,0,0,0,0,0,0,0\n", "t"), DataError);
  EXPECT_THROW(io::parse_annotations("frame,occ,rot,ov,bc,iv,mb,sv,xx\n", "t"), DataError);
}

TEST(AnnotationFiles, FormatParseRoundTrip) {
  Rng rng(6);
  const auto seq = tracklinic::testing::random_finalized_sequence(rng, "r", 300);
  const auto rows = io::parse_annotations(io::format_annotations(seq.labels), "t");
  ASSERT_EQ(rows.size(), seq.labels.size());
  for (std::size_t t = 0; t < rows.size(); ++t) EXPECT_EQ(rows[t], seq.labels[t].active);
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  EXPECT_EQ(config_from_json(json::parse(R"({"tau_s": 12})")).tau_s, 12);
  EXPECT_THROW(config_from_json(json::parse(R"({"tau_x": 1})")), DataError);
  EXPECT_THROW(config_from_json(json::parse(R"({"tau_iou": 2.0})")), DataError);
  EXPECT_EQ(config_from_json(to_json(kCfg)).tau_op, kCfg.tau_op);
}

TEST(Layouts, FormatParseRoundTrip) {
  const auto layouts = sim::demo_layouts(3, 10);
  EXPECT_EQ(io::parse_layouts(io::format_layouts(layouts), "t"), layouts);
  EXPECT_THROW(io::parse_layouts("sequence,frames,factor,start,length\na,10,XX,1,2\n", "t"), DataError);
}

TEST_F(Scratch, ManifestChecksFilesAndIds) {
  write("c/a.gt.txt", "1,1,1,1\n");
  write("c/a.labels.csv", "frame,occ,rot,ov,bc,iv,mb,sv\n0,0,0,0,0,0,0,0\n");
  write("c/m1.csv", "sequence_id,groundtruth,annotation\na,a.gt.txt,a.labels.csv\n");
  EXPECT_EQ(io::parse_manifest(path("c/m1.csv")).size(), 1u);
  write("c/m2.csv", "sequence_id,groundtruth,annotation\na,a.gt.txt,a.labels.csv\na,a.gt.txt,a.labels.csv\n");
  EXPECT_THROW(io::parse_manifest(path("c/m2.csv")), DataError);
  write("c/m3.csv", "sequence_id,groundtruth,annotation\nb,b.gt.txt,b.labels.csv\n");
  EXPECT_THROW(io::parse_manifest(path("c/m3.csv")), DataError);
}

TEST_F(Scratch, AnnotateHandCase) {
  write("raw/h.gt.txt", "0,0,20,20\n0,0,10,40\n0,0,60,60\n");
  write("raw/h.labels.csv", "frame,occ,rot,ov,bc,iv,mb,sv\n0,0,0,0,0,1,0,0\n1,0,0,0,0,0,0,0\n2,0,0,0,0,0,0,0\n");
  write("raw/manifest.csv", "sequence_id,groundtruth,annotation\nh,h.gt.txt,h.labels.csv\n");
  const auto s = cmd::cmd_annotate(path("raw/manifest.csv"), opts("ann"));
  EXPECT_EQ(s.sequences, 1u);
  EXPECT_EQ(s.sv_frames, 1u);
  const auto rows = io::parse_annotations(io::read_file(path("ann/h.labels.csv")), "t");
  EXPECT_EQ(rows, (std::vector<FactorSet>{{FactorKind::IV}, {}, {FactorKind::SV}}));
  // the annotated corpus is loadable and consistent
  const auto seqs = cmd::detail::load_manifest_sequences(path("ann/manifest.csv"), opts("x"));
  ASSERT_EQ(seqs.size(), 1u);
  EXPECT_TRUE(validate_labels(seqs[0]).empty());
}

TEST_F(Scratch, AnnotateRefusesToOverwriteItsInputs) {
  const auto manifest = write_corpus("raw", {tracklinic::testing::build_sequence({{{}, 5}})});
  EXPECT_THROW(cmd::cmd_annotate(manifest, opts("raw")), UsageError);
}

TEST_F(Scratch, ExtractAndSimulateNeverClearTheirInputs) {
  const auto manifest = write_corpus("out/clips/raw", {tracklinic::testing::build_sequence({{{}, 5}})});
  EXPECT_THROW(cmd::cmd_extract(manifest, opts("out")), UsageError);
  EXPECT_TRUE(fs::exists(manifest));
  write("s/results/layout.csv", io::format_layouts(sim::demo_layouts(1, 2)));
  EXPECT_THROW(cmd::cmd_simulate(path("s/results/layout.csv"), std::nullopt, opts("s")), UsageError);
  EXPECT_TRUE(fs::exists(path("s/results/layout.csv")));
}

TEST_F(Scratch, AnnotateRejectsAlreadyCompoundInput) {
  write("raw/h.gt.txt", "0,0,20,20\n");
  write("raw/h.labels.csv", "frame,occ,rot,ov,bc,iv,mb,sv,o-b,o-r\n0,0,0,0,0,0,0,0,1,0\n");
  write("raw/manifest.csv", "sequence_id,groundtruth,annotation\nh,h.gt.txt,h.labels.csv\n");
  EXPECT_THROW(cmd::cmd_annotate(path("raw/manifest.csv"), opts("ann")), DataError);
}

TEST_F(Scratch, ExtractEmptyCorpus) {
  write("e/manifest.csv", "sequence_id,groundtruth,annotation\n");
  const auto summary = cmd::cmd_extract(path("e/manifest.csv"), opts("out"));
  EXPECT_EQ(summary.total_clips, 0u);
  for (const auto& [f, n] : summary.census) EXPECT_EQ(n, 0u);
  EXPECT_TRUE(fs::exists(path("out/census.json")));
}

TEST_F(Scratch, ExtractRejectsUnvalidatedLabels) {
  auto seq = tracklinic::testing::build_sequence({{{}, 20}, {{FactorKind::OV}, 3}, {{}, 3}});  // OV visible
  const auto manifest = write_corpus("c", {seq});
  EXPECT_THROW(cmd::cmd_extract(manifest, opts("out")), DataError);
}

TEST_F(Scratch, ExtractMatchesOracleAndWritesFaithfulClips) {
  cmd::Options o = opts("sim");
  const auto sims = cmd::cmd_simulate(std::nullopt, std::nullopt, o);
  cmd::cmd_annotate(path("sim/corpus/manifest.csv"), opts("ann"));
  const auto summary = cmd::cmd_extract(path("ann/manifest.csv"), opts("ext"));
  EXPECT_EQ(summary.total_clips, sims.clips);

  std::size_t oracle = 0;
  std::vector<ExtractedClip> expected;
  for (const auto& seq : cmd::detail::load_manifest_sequences(path("ann/manifest.csv"), o)) {
    auto clips = sim::oracle_extract(seq, kCfg);
    oracle += clips.size();
    for (auto& c : clips) expected.push_back(std::move(c));
  }
  EXPECT_EQ(summary.total_clips, oracle);
  EXPECT_GT(oracle, 100u);

  std::sort(expected.begin(), expected.end(),
            [](const ExtractedClip& a, const ExtractedClip& b) { return a.clip_id < b.clip_id; });
  EXPECT_EQ(io::load_clips(path("ext/clips")), expected);
}

TEST_F(Scratch, SimulatedCorpusAnnotatesCleanly) {
  cmd::cmd_simulate(std::nullopt, std::nullopt, opts("sim"));
  const auto s = cmd::cmd_annotate(path("sim/corpus/manifest.csv"), opts("ann"));
  EXPECT_EQ(s.sequences, cmd::kDemoSequences);
  EXPECT_GT(s.sv_frames, 0u);
  EXPECT_GT(s.compound_frames, 0u);
  for (const auto& seq : cmd::detail::load_manifest_sequences(path("ann/manifest.csv"), opts("x"))) {
    EXPECT_TRUE(validate_labels(seq).empty()) << seq.sequence_id;
  }
}

class EvaluateFixture : public Scratch {
 protected:
  void SetUp() override {
    Scratch::SetUp();
    const auto seq = tracklinic::testing::build_sequence({{{}, 40}, {{FactorKind::IV}, 20}, {{}, 12}, {{FactorKind::MB}, 5}});
    cmd::cmd_extract(write_corpus("c", {seq}), opts("ext"));
    clips_ = io::load_clips(path("ext/clips"));
    ASSERT_EQ(clips_.size(), 2u);
    for (const auto& c : clips_) write("res/perfect/" + c.clip_id + ".txt", io::format_boxes(c.groundtruth));
  }
  std::vector<ExtractedClip> clips_;
};

TEST_F(EvaluateFixture, PerfectTrackerFixture) {
  const auto out = cmd::cmd_evaluate(path("ext/clips"), path("res"), opts("eval"));
  ASSERT_EQ(out.at("perfect").size(), 2u);
  for (const auto& o : out.at("perfect")) {
    EXPECT_EQ(o.verdict, Verdict::Success);
    EXPECT_EQ(o.success_score, 1.0);
  }
  EXPECT_TRUE(fs::exists(path("eval/perfect.outcomes.json")));
  const auto report = cmd::cmd_report({path("eval")}, opts("rep"));
  ASSERT_EQ(report.trackers.size(), 1u);
  EXPECT_TRUE(report.trackers[0].failure_proportions.empty());
  EXPECT_EQ(parse_structured(io::read_file(path("rep/report.tkreport.json"))), report);
  EXPECT_TRUE(fs::exists(path("rep/report.md")));
  EXPECT_TRUE(fs::exists(path("rep/consistency.svg")));
}

TEST_F(EvaluateFixture, MissingResultFileNamesTheClip) {
  fs::remove(path("res/perfect/" + clips_[1].clip_id + ".txt"));
  try {
    cmd::cmd_evaluate(path("ext/clips"), path("res"), opts("eval"));
    FAIL() << "expected a DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(clips_[1].clip_id), std::string::npos);
  }
}

TEST_F(EvaluateFixture, TruncatedResultFileReportsBothCounts) {
  auto boxes = clips_[0].groundtruth;
  boxes.pop_back();
  write("res/perfect/" + clips_[0].clip_id + ".txt", io::format_boxes(boxes));
  try {
    cmd::cmd_evaluate(path("ext/clips"), path("res"), opts("eval"));
    FAIL() << "expected a DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(std::to_string(clips_[0].length())), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::to_string(clips_[0].length() - 1)), std::string::npos) << msg;
  }
}

TEST_F(EvaluateFixture, ReportRejectsMismatchedCorporaAndDuplicateTrackers) {
  cmd::cmd_evaluate(path("ext/clips"), path("res"), opts("e1"));
  cmd::cmd_evaluate(path("ext/clips"), path("res"), opts("e2"));
  EXPECT_THROW(cmd::cmd_report({path("e1"), path("e2")}, opts("rep")), DataError);
  write("e2/corpus.json", "{\"census\": {}, \"total_clips\": 0, \"total_frames\": 0, \"clips\": []}\n");
  EXPECT_THROW(cmd::cmd_report({path("e1"), path("e2")}, opts("rep")), DataError);
}

TEST_F(Scratch, SimulatedTrackersRecoverPlantedProbabilities) {
  cmd::Options o = opts("sim");
  o.seed = 42;
  cmd::cmd_simulate(std::nullopt, std::nullopt, o);
  cmd::cmd_annotate(path("sim/corpus/manifest.csv"), opts("ann"));
  cmd::cmd_extract(path("ann/manifest.csv"), opts("ext"));
  const auto out = cmd::cmd_evaluate(path("ext/clips"), path("sim/results"), opts("eval"));
  const auto profiles = cmd::default_profiles(42);
  for (const auto& prof : profiles) {
    for (const auto& st : all_factor_stats(out.at(prof.name), kCfg)) {
      const double p = prof.failure_probability[factor_index(st.factor)];
      const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(st.n_clips));
      EXPECT_NEAR(st.failure_rate, p, 3 * sigma + 1e-12) << prof.name << " " << factor_name(st.factor) << " n="
                                                        << st.n_clips;
    }
  }
}

TEST_F(Scratch, CliExitCodes) {
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("report"), 1);
  EXPECT_EQ(run_cli("extract --bogus x"), 1);
  EXPECT_EQ(run_cli("report " + path("nowhere").string() + " --out " + path("r").string()), 2);
  write("bad/manifest.csv", "nope\n");
  EXPECT_EQ(run_cli("extract " + path("bad/manifest.csv").string() + " --out " + path("o").string()), 2);
  write("cfg.json", "{\"tau_q\": 3}");
  EXPECT_EQ(run_cli("extract " + path("bad/manifest.csv").string() + " --config " + path("cfg.json").string()), 2);
}

TEST_F(Scratch, CliPipelineRuns) {
  const std::string s = path("s").string(), a = path("a").string(), x = path("x").string(),
                    e = path("e").string(), r = path("r").string();
  ASSERT_EQ(run_cli("simulate --seed 7 --out " + s), 0);
  ASSERT_EQ(run_cli("annotate " + s + "/corpus/manifest.csv --out " + a), 0);
  ASSERT_EQ(run_cli("extract " + a + "/manifest.csv --jobs 4 --out " + x), 0);
  ASSERT_EQ(run_cli("evaluate " + x + "/clips " + s + "/results --trackers alpha --out " + e), 0);
  ASSERT_EQ(run_cli("report " + e + " --out " + r), 0);
  const auto report = parse_structured(io::read_file(path("r/report.tkreport.json")));
  ASSERT_EQ(report.trackers.size(), 1u);
  EXPECT_EQ(report.trackers[0].name, "alpha");
  // TRACKLINIC_OUT supplies the default output directory
  ASSERT_EQ(run_cli("report " + e, "TRACKLINIC_OUT=" + path("env").string()), 0);
  EXPECT_TRUE(fs::exists(path("env/report.md")));
}

}  // namespace
