#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  const std::string out_file = "/tmp/twinforge_cli_out.txt";
  const std::string err_file = "/tmp/twinforge_cli_err.txt";
  const std::string cmd =
      std::string(TWINFORGE_CLI_PATH) + " " + args + " >" + out_file + " 2>" + err_file;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

// fast-training knobs shared by the smoke runs
const char* kTinyLearner =
    " --learner.hidden 8 --learner.rollout_steps 64 --learner.minibatch 32"
    " --learner.epochs 2 --learner.eval_interval 64 --learner.eval_episodes 2"
    " --learner.success_target 0.0 --env.horizon 30";

}  // namespace

TEST_CASE("help lists every subcommand") {
  const CliResult r = run_cli("--help");
  CHECK(r.code == 0);
  for (const char* sub : {"pretrain", "serve-plant", "run", "evaluate", "report"})
    CHECK(r.out.find(sub) != std::string::npos);
}

TEST_CASE("missing config file exits 1 and names the path") {
  const CliResult r = run_cli("--config /tmp/twinforge_no_such_config.toml pretrain");
  CHECK(r.code == 1);
  CHECK(r.err.find("/tmp/twinforge_no_such_config.toml") != std::string::npos);
}

TEST_CASE("pretrain with zero steps writes only the initial checkpoint") {
  const std::string dir = "/tmp/twinforge_cli_pre0";
  fs::remove_all(dir);
  const CliResult r =
      run_cli("--out " + dir + " --total-steps 0" + kTinyLearner + " pretrain");
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(fs::exists(dir + "/config.toml"));
  CHECK(fs::exists(dir + "/best.tfck"));
  CHECK(fs::exists(dir + "/ckpt_0.tfck"));
  CHECK(fs::exists(dir + "/reward_curve.csv"));
  CHECK_FALSE(fs::exists(dir + "/ckpt_64.tfck"));
}

TEST_CASE("the echoed config reproduces the run") {
  const std::string dir_a = "/tmp/twinforge_cli_echo_a";
  const std::string dir_b = "/tmp/twinforge_cli_echo_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const CliResult a = run_cli("--out " + dir_a + " --seed 11 --total-steps 128" + kTinyLearner +
                              " --env.c2 0.2 pretrain");
  REQUIRE(a.code == 0);
  // feed the echoed config back, overriding only the output directory
  const CliResult b =
      run_cli("--config " + dir_a + "/config.toml --out " + dir_b + " pretrain");
  REQUIRE(b.code == 0);
  CHECK(slurp(dir_a + "/reward_curve.csv") == slurp(dir_b + "/reward_curve.csv"));
}

TEST_CASE("stub loopback run completes every episode") {
  const std::string dir = "/tmp/twinforge_cli_stub";
  fs::remove_all(dir);
  const CliResult r =
      run_cli("--out " + dir + " --episodes 3 run --stub --loopback");
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(r.out.find("episodes=3") != std::string::npos);
  CHECK(fs::exists(dir + "/session_log.jsonl"));
  CHECK(fs::exists(dir + "/plant_log.jsonl"));
}

TEST_CASE("evaluate prints stats for a checkpoint") {
  const std::string dir = "/tmp/twinforge_cli_eval";
  fs::remove_all(dir);
  REQUIRE(run_cli("--out " + dir + " --total-steps 0" + kTinyLearner + " pretrain").code == 0);
  const CliResult r = run_cli("--env.horizon 30 evaluate --checkpoint " + dir +
                              "/best.tfck --episodes 2");
  CHECK(r.code == 0);
  CHECK(r.out.find("mean_eval_reward=") != std::string::npos);
  CHECK(r.out.find("success_rate=") != std::string::npos);
}

TEST_CASE("serve-plant exits 3 when the port is taken") {
  const int port = 46177;
  const int sock = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(sock >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::bind(sock, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);

  const CliResult r =
      run_cli("--out /tmp/twinforge_cli_bind --port " + std::to_string(port) + " serve-plant");
  ::close(sock);
  CHECK(r.code == 3);
  CHECK(r.err.find("bind") != std::string::npos);
}

TEST_CASE("report on an empty session log summarizes zero episodes") {
  const std::string dir = "/tmp/twinforge_cli_report_empty";
  fs::remove_all(dir);
  const std::string log = "/tmp/twinforge_cli_empty.jsonl";
  {
    std::ofstream out(log);
    out << "{\"session_end\":\"completed\"}\n";
  }
  const CliResult r = run_cli("--out " + dir + " report --session " + log);
  CHECK(r.code == 0);
  const std::string summary = slurp(dir + "/summary.txt");
  CHECK(summary.find("episodes=0") != std::string::npos);
  CHECK(summary.find("retrain_ratio=0") != std::string::npos);
}

TEST_CASE("report of two identical curves has an all-zero difference column") {
  const std::string dir = "/tmp/twinforge_cli_report_same";
  fs::remove_all(dir);
  const std::string curve = "/tmp/twinforge_cli_curve.csv";
  {
    std::ofstream out(curve);
    out << "global_step,mean_eval_reward,success_rate,collision_rate\n";
    out << "0,-1.5,0,0\n1024,0.25,0.5,0.1\n2048,0.75,0.9,0\n";
  }
  const CliResult r = run_cli("--out " + dir + " report --pretrain-curve " + curve +
                              " --retrain-curve " + curve);
  CHECK(r.code == 0);
  std::ifstream in(dir + "/report.csv");
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CHECK(line.substr(line.rfind(',') + 1) == "0");
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("report exits 1 on a malformed session log") {
  const std::string log = "/tmp/twinforge_cli_bad.jsonl";
  {
    std::ofstream out(log);
    out << "this is not json\n";
  }
  const CliResult r =
      run_cli("--out /tmp/twinforge_cli_report_bad report --session " + log);
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}
