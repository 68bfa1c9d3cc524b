#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ftvsr/frames.hpp"
#include "ftvsr/keyvalue.hpp"
#include "ftvsr_tools/commands.hpp"
#include "test_util.hpp"

using namespace ftvsr;
using namespace ftvsr::tools;
using ftvsr::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every regular file under root, keyed by relative path, with a hash of its
// bytes. Echoed configs carry the output path and are skipped.
std::map<std::string, std::size_t> tree(const fs::path& root) {
  std::map<std::string, std::size_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const auto name = e.path().filename();
    if (!e.is_regular_file() || name == "config.txt" || name == "degrade_config.txt" || name == "synth.txt") continue;
    out[fs::relative(e.path(), root).string()] = std::hash<std::string>{}(slurp(e.path()));
  }
  return out;
}

void make_dataset(const fs::path& root, std::size_t clips, std::size_t frames, std::size_t size, double q = 1.0) {
  SynthOptions s;
  s.output = root;
  s.clips = clips;
  s.frames = frames;
  s.size = size;
  s.seed = 21;
  cmd_synth(s);
  DegradeOptions d;
  d.input = root;
  d.dataset = true;
  d.spec.scale = 2;
  d.spec.compression_q = q;
  d.seed = 5;
  cmd_degrade(d);
}

TrainOptions small_train(const fs::path& data, const fs::path& out) {
  TrainOptions t;
  t.data = data;
  t.output = out;
  t.model.scale = 2;
  t.model.block = 4;
  t.model.token_block = 2;
  t.model.model_dim = 8;
  t.model.hidden_channels = 4;
  t.model.upsampler_width = 8;
  t.model.seed = 9;
  t.steps = 4;
  t.batch = 2;
  t.lr_base = 2e-3;
  t.checkpoint_every = 2;
  return t;
}

int run_cli(const std::string& args, const fs::path& stderr_path) {
  const std::string cmd = std::string(FTVSR_CLI_PATH) + " " + args + " 2> " + stderr_path.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Degrade, FixedSeedIsByteIdentical) {
  TempDir dir("cli_deg");
  make_dataset(dir.path() / "a", 2, 3, 16);
  make_dataset(dir.path() / "b", 2, 3, 16);
  EXPECT_EQ(tree(dir.path() / "a"), tree(dir.path() / "b"));
  EXPECT_TRUE(fs::exists(dir.path() / "a" / "clip_001" / "lr" / "00000002.ppm"));
}

TEST(Degrade, JobsDoNotChangeOutput) {
  TempDir dir("cli_jobs");
  write_frame_dir(dir.path() / "hr", synthetic_clip(3, 4, 3, 16, 16));
  DegradeOptions d;
  d.input = dir.path() / "hr";
  d.spec.scale = 2;
  d.spec.noise_sigma = 5.0 / 255.0;
  d.spec.compression_q = 2.0;
  d.seed = 17;
  d.output = dir.path() / "one";
  cmd_degrade(d);
  d.output = dir.path() / "four";
  d.jobs = 4;
  cmd_degrade(d);
  EXPECT_EQ(tree(dir.path() / "one"), tree(dir.path() / "four"));
}

TEST(Degrade, NoOpReproducesInputBytesAndManifestRoundTrips) {
  TempDir dir("cli_noop");
  write_frame_dir(dir.path() / "hr", synthetic_clip(4, 2, 3, 12, 10));
  DegradeOptions d;
  d.input = dir.path() / "hr";
  d.output = dir.path() / "out";
  cmd_degrade(d);
  for (const char* f : {"00000000.ppm", "00000001.ppm"})
    EXPECT_EQ(slurp(dir.path() / "hr" / f), slurp(dir.path() / "out" / f)) << f;

  d.spec.scale = 2;
  d.spec.blur_sigma = 0.8;
  d.spec.blur_size = 5;
  d.spec.noise_sigma = 3.0 / 255.0;
  d.spec.compression_q = 2.5;
  d.output = dir.path() / "out2";
  cmd_degrade(d);
  const auto kv = read_key_values(dir.path() / "out2" / "degradation.txt");
  EXPECT_EQ(DegradationSpec::from_key_values(kv), d.spec);
}

TEST(Degrade, RejectsNonUniformFrames) {
  TempDir dir("cli_sizes");
  fs::create_directories(dir.path() / "hr");
  write_pnm(dir.path() / "hr" / "0.ppm", Tensor::zeros({3, 8, 8}));
  write_pnm(dir.path() / "hr" / "1.ppm", Tensor::zeros({3, 8, 6}));
  DegradeOptions d;
  d.input = dir.path() / "hr";
  d.output = dir.path() / "out";
  EXPECT_ANY_THROW(cmd_degrade(d));
}

TEST(Train, IdenticalRunsGiveIdenticalLogs) {
  TempDir dir("cli_train");
  make_dataset(dir.path() / "data", 3, 2, 16);
  std::ostringstream log;
  cmd_train(small_train(dir.path() / "data", dir.path() / "r1"), log);
  cmd_train(small_train(dir.path() / "data", dir.path() / "r2"), log);
  EXPECT_EQ(tree(dir.path() / "r1"), tree(dir.path() / "r2"));
  const auto kv = read_key_values(dir.path() / "r1" / "config.txt");
  EXPECT_EQ(require_key(kv, "steps"), "4");
}

TEST(Train, ResumeContinuesTheStepCounterAndMatchesAStraightRun) {
  TempDir dir("cli_resume");
  make_dataset(dir.path() / "data", 3, 2, 16);
  std::ostringstream log;
  TrainOptions straight = small_train(dir.path() / "data", dir.path() / "straight");
  straight.lr_min = straight.lr_base;  // constant schedule, independent of the total
  cmd_train(straight, log);

  TrainOptions part = straight;
  part.output = dir.path() / "split";
  part.steps = 2;
  cmd_train(part, log);
  part.steps = 4;
  part.resume = true;
  const TrainSummary s = cmd_train(part, log);
  EXPECT_EQ(s.first_step, 3u);
  EXPECT_EQ(s.last_step, 4u);
  EXPECT_EQ(slurp(dir.path() / "straight" / "loss.csv"), slurp(dir.path() / "split" / "loss.csv"));
  EXPECT_EQ(tree(dir.path() / "straight" / "checkpoint"), tree(dir.path() / "split" / "checkpoint"));
}

TEST(Train, DivergenceKeepsTheLastGoodCheckpoint) {
  TempDir dir("cli_nan");
  make_dataset(dir.path() / "data", 2, 2, 16);
  TrainOptions t = small_train(dir.path() / "data", dir.path() / "run");
  t.lr_base = t.lr_min = 1e250;
  t.checkpoint_every = 1;
  t.steps = 6;
  std::ostringstream log;
  try {
    cmd_train(t, log);
    FAIL() << "expected divergence";
  } catch (const CommandError& e) {
    EXPECT_NE(std::string(e.what()).find("last good checkpoint"), std::string::npos);
  }
  const Checkpoint c = load_checkpoint(dir.path() / "run" / "checkpoint");
  EXPECT_GE(c.step, 1u);
  EXPECT_LT(c.step, 6u);
  for (const auto& [name, tensor] : c.params.named())
    for (double v : tensor.data()) ASSERT_TRUE(std::isfinite(v)) << name;
}

TEST(Eval, ReferenceAgainstItselfIsPerfect) {
  TempDir dir("cli_eval");
  write_frame_dir(dir.path() / "hr", synthetic_clip(6, 3, 3, 16, 16));
  for (ChannelMode mode : {ChannelMode::kRgb, ChannelMode::kY}) {
    const EvalReport r = evaluate_frame_dirs(dir.path() / "hr", dir.path() / "hr", mode);
    EXPECT_EQ(r.per_frame.size(), 3u);
    EXPECT_EQ(r.mean_psnr_db, kPsnrCap);
    EXPECT_NEAR(r.mean_ssim, 1.0, 1e-9);
  }
}

TEST(Eval, TrainedCheckpointAndBaselineReports) {
  TempDir dir("cli_evalrun");
  make_dataset(dir.path() / "data", 3, 2, 16);
  std::ostringstream log;
  cmd_train(small_train(dir.path() / "data", dir.path() / "run"), log);
  EvalOptions e;
  e.data = dir.path() / "data";
  e.checkpoint = dir.path() / "run" / "checkpoint";
  e.output = dir.path() / "eval";
  e.first_clip = 1;
  e.jobs = 2;
  const EvalReport r = cmd_eval(e);
  EXPECT_EQ(r.per_frame.size(), 4u);
  EXPECT_TRUE(fs::exists(dir.path() / "eval" / "clip_001.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "eval" / "eval.csv"));
  e.checkpoint = dir.path() / "nowhere";
  try {
    cmd_eval(e);
    FAIL() << "expected a missing-checkpoint error";
  } catch (const CommandError& err) {
    EXPECT_NE(std::string(err.what()).find("nowhere"), std::string::npos);
  }
}

TEST(Spectra, ConstantInputHasOneNonzeroRow) {
  TempDir dir("cli_spec");
  write_frame_dir(dir.path() / "c", Tensor::full({2, 3, 16, 16}, 128.0 / 255.0));
  SpectraOptions s;
  s.input = dir.path() / "c";
  s.output = dir.path() / "s.csv";
  cmd_spectra(s);
  std::istringstream in(slurp(s.output));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "band,input");
  std::size_t nonzero = 0, rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (std::stod(line.substr(line.find(',') + 1)) > 1e-12) ++nonzero;
  }
  EXPECT_EQ(rows, 15u);
  EXPECT_EQ(nonzero, 1u);
}

TEST(Spectra, GapWidensWithCompression) {
  TempDir dir("cli_gap");
  const Tensor hr = synthetic_clip(8, 2, 3, 32, 32);
  write_frame_dir(dir.path() / "hr", hr);
  double previous = -1.0;
  for (double q : {1.0, 4.0, 16.0}) {
    DegradationSpec spec;
    spec.compression_q = q;
    const fs::path lq = dir.path() / ("q" + format_double(q));
    write_frame_dir(lq, degrade(hr, spec, 0));
    SpectraOptions s;
    s.input = lq;
    s.reference = dir.path() / "hr";
    s.output = dir.path() / "gap.csv";
    s.band_lo = 6;
    s.band_hi = 14;
    cmd_spectra(s);
    std::istringstream in(slurp(s.output));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "band,input,reference,gap");
    double gap = 0.0;
    while (std::getline(in, line)) gap += std::abs(std::stod(line.substr(line.rfind(',') + 1)));
    EXPECT_GT(gap, previous) << q;
    previous = gap;
  }
}

TEST(Spectra, BandRangeIsValidated) {
  TempDir dir("cli_band");
  write_frame_dir(dir.path() / "c", Tensor::zeros({1, 1, 8, 8}));
  SpectraOptions s;
  s.input = dir.path() / "c";
  s.output = dir.path() / "s.csv";
  s.band_lo = 5;
  s.band_hi = 4;
  EXPECT_THROW(cmd_spectra(s), CommandError);
  s.band_lo = 0;
  s.band_hi = 15;
  EXPECT_THROW(cmd_spectra(s), CommandError);
}

TEST(Binary, ErrorsGoToStderrWithNonZeroExit) {
  TempDir dir("cli_bin");
  EXPECT_NE(run_cli("eval --data " + (dir.path() / "none").string() + " --output " + (dir.path() / "o").string(),
                    dir.path() / "err.txt"),
            0);
  EXPECT_EQ(slurp(dir.path() / "err.txt").rfind("error: ", 0), 0u);
  EXPECT_NE(run_cli("spectra --input x --output y --band-lo 3 --band-hi 2", dir.path() / "err2.txt"), 0);
}

TEST(Binary, SeedPrecedenceFlagsOverEnvOverFile) {
  TempDir dir("cli_seed");
  std::ofstream(dir.path() / "synth.ini") << "clips=1\nframes=1\nsize=8\nseed=3\n";
  const std::string base = "synth --config " + (dir.path() / "synth.ini").string() + " --output ";
  const fs::path err = dir.path() / "err.txt";
  ASSERT_EQ(run_cli(base + (dir.path() / "file").string(), err), 0) << slurp(err);
  setenv("FTVSR_SEED", "5", 1);
  const int env_status = run_cli(base + (dir.path() / "env").string(), err);
  const int both_status = run_cli(base + (dir.path() / "flag").string() + " --seed 8", err);
  unsetenv("FTVSR_SEED");
  ASSERT_EQ(env_status, 0);
  ASSERT_EQ(both_status, 0);
  const auto seed_of = [&](const char* run) {
    return require_key(read_key_values(dir.path() / run / "synth.txt"), "seed");
  };
  EXPECT_EQ(seed_of("file"), "3");
  EXPECT_EQ(seed_of("env"), "5");
  EXPECT_EQ(seed_of("flag"), "8");
}

TEST(Binary, EchoedConfigReproducesTheRun) {
  TempDir dir("cli_echo");
  write_frame_dir(dir.path() / "hr", synthetic_clip(12, 2, 3, 16, 16));
  const fs::path err = dir.path() / "err.txt";
  ASSERT_EQ(run_cli("degrade --input " + (dir.path() / "hr").string() + " --output " + (dir.path() / "a").string() +
                        " --scale 2 --noise 4 --quality 2 --seed 6",
                    err),
            0)
      << slurp(err);
  ASSERT_EQ(run_cli("degrade --config " + (dir.path() / "a" / "config.txt").string() + " --output " +
                        (dir.path() / "b").string(),
                    err),
            0)
      << slurp(err);
  EXPECT_EQ(tree(dir.path() / "a"), tree(dir.path() / "b"));
  EXPECT_EQ(slurp(dir.path() / "a" / "degradation.txt"), slurp(dir.path() / "b" / "degradation.txt"));
  std::ofstream(dir.path() / "bad.txt") << "colour=red\n";
  EXPECT_NE(run_cli("degrade --input x --output y --config " + (dir.path() / "bad.txt").string(), err), 0);
  EXPECT_NE(slurp(err).find("unknown key"), std::string::npos);
}
