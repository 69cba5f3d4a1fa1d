// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests of the mds binary. argv[1] is the path to the built tool.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::string g_tool;
fs::path g_root;

#define CLI_CHECK(cond, what)                                              \
  do {                                                                     \
    if (cond) {                                                            \
      std::printf("[ ok ] %s\n", what);                                    \
    } else {                                                               \
      std::printf("[FAIL] %s (%s:%d)\n", what, __FILE__, __LINE__);        \
      ++g_failures;                                                        \
    }                                                                      \
  } while (0)

int run(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = g_tool + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::string captured;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) captured.append(buf, n);
  const int status = pclose(pipe);
  if (output) *output = captured;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool trees_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel_a;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  std::vector<fs::path> rel_b;
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return false;
  for (const auto& rel : rel_a)
    if (slurp(a / rel) != slurp(b / rel)) return false;
  return true;
}

void test_synth() {
  const fs::path d1 = g_root / "synth1", d2 = g_root / "synth1_snapshot";
  std::string out;
  CLI_CHECK(run("synth --n-real 4 --n-fake 4 --seed 7 -o " + d1.string(), &out) == 0,
            "synth exits 0");
  CLI_CHECK(out.find("8 clips") != std::string::npos, "synth reports the clip count");
  CLI_CHECK(fs::exists(d1 / "manifest.json"), "synth writes a manifest");
  CLI_CHECK(fs::exists(d1 / "provenance.json"), "synth writes provenance");

  fs::copy(d1, d2, fs::copy_options::recursive);
  CLI_CHECK(run("synth --n-real 4 --n-fake 4 --seed 7 -o " + d1.string()) == 0, "synth rerun");
  CLI_CHECK(trees_identical(d1, d2), "rerunning the same command is byte-identical");

  CLI_CHECK(run("synth --n-real -1 -o " + (g_root / "bad").string()) != 0,
            "negative clip count is a usage error");
  CLI_CHECK(run("bogus-subcommand") != 0, "unknown subcommand fails");
}

void test_pipeline() {
  const fs::path data = g_root / "data";
  const fs::path run_dir = g_root / "run";
  // Small but learnable: 16x16 frames, 3 s clips, 14 train clips per class.
  CLI_CHECK(run("synth --n-real 20 --n-fake 20 --seed 11 -o " + data.string() +
                " --set synth.frame_h=16 --set synth.frame_w=16 --set synth.duration_s=3"
                " --set split.train=0.7 --set split.val=0.15") == 0,
            "synth corpus for the pipeline");

  std::string out;
  CLI_CHECK(run("train --manifest " + (data / "manifest.json").string() + " -o " +
                    run_dir.string() +
                    " --set streams.embed_dim=32 --set train.epochs=4 --set train.batch_size=8"
                    " --seed 3",
                &out) == 0,
            "train exits 0");
  CLI_CHECK(fs::exists(run_dir / "last.ckpt"), "train writes last.ckpt");
  CLI_CHECK(fs::exists(run_dir / "metrics.jsonl"), "train writes metrics");

  const std::string ckpt = (run_dir / "last.ckpt").string();
  const std::string manifest = (data / "manifest.json").string();

  CLI_CHECK(run("score --checkpoint " + ckpt + " --manifest " + manifest + " -o " +
                    (g_root / "scores").string(),
                &out) == 0,
            "score exits 0");
  CLI_CHECK(out.find("tau") != std::string::npos, "score prints the calibrated tau");
  CLI_CHECK(fs::exists(g_root / "scores" / "scores.json"), "score writes reports");
  CLI_CHECK(fs::exists(g_root / "scores" / "mds_distribution.svg"), "score writes the histogram");

  CLI_CHECK(run("score --checkpoint " + ckpt + " --manifest " + manifest + " -o " +
                (g_root / "scores_bad").string() + " --set features.n_mfcc=10") == 2,
            "mismatched feature config refused with exit 2");

  CLI_CHECK(run("eval --checkpoint " + ckpt + " --manifest " + manifest + " -o " +
                    (g_root / "eval").string(),
                &out) == 0,
            "eval exits 0");
  CLI_CHECK(out.find("video-wise AUC:") != std::string::npos, "eval prints video-wise AUC");
  CLI_CHECK(out.find("frame-wise AUC:") != std::string::npos, "eval prints frame-wise AUC");

  CLI_CHECK(run("eval --checkpoint " + ckpt + " --manifest " + (g_root / "nope.json").string() +
                " -o " + (g_root / "eval2").string()) == 2,
            "missing manifest is a data error (exit 2)");
}

void test_localize() {
  const fs::path data = g_root / "spliced";
  CLI_CHECK(run("synth --n-real 6 --n-fake 6 --seed 13 -o " + data.string() +
                " --set synth.frame_h=16 --set synth.frame_w=16 --set synth.duration_s=6"
                " --set synth.fake_modes=[\\\"splice\\\"]"
                " --set split.train=0.5 --set split.val=0.0") == 0,
            "synth spliced corpus");
  const fs::path run_dir = g_root / "run2";
  CLI_CHECK(run("train --manifest " + (data / "manifest.json").string() + " -o " +
                run_dir.string() +
                " --set streams.embed_dim=32 --set train.epochs=2 --set train.batch_size=8") == 0,
            "train on the spliced corpus");
  std::string out;
  CLI_CHECK(run("localize --checkpoint " + (run_dir / "last.ckpt").string() + " --manifest " +
                    (data / "manifest.json").string() + " -o " + (g_root / "loc").string(),
                &out) == 0,
            "localize exits 0");
  CLI_CHECK(fs::exists(g_root / "loc" / "localization.json"), "localize writes the span table");
  bool any_svg = false;
  if (fs::exists(g_root / "loc" / "plots"))
    for (const auto& e : fs::directory_iterator(g_root / "loc" / "plots"))
      any_svg |= e.path().extension() == ".svg";
  CLI_CHECK(any_svg, "localize emits per-clip svg plots");
  CLI_CHECK(out.find("spans:") != std::string::npos, "localize prints span tables");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: mds_cli_tests <path-to-mds-binary>\n");
    return 2;
  }
  g_tool = argv[1];
  g_root = fs::temp_directory_path() / ("mds_cli_" + std::to_string(::getpid()));
  fs::create_directories(g_root);

  test_synth();
  test_pipeline();
  test_localize();

  std::error_code ec;
  fs::remove_all(g_root, ec);
  if (g_failures) {
    std::printf("%d cli check(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all cli checks passed\n");
  return 0;
}
