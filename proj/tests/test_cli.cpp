#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string err;
};

class CliFixture {
public:
  CliFixture() {
    dir_ = fs::temp_directory_path() /
           ("mbpm_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(dir_);
  }
  ~CliFixture() { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(path(name), std::ios::binary);
    out << content;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  json read_json(const std::string& name) const { return json::parse(read(name)); }

  RunResult run(const std::string& args, const std::string& env = "") const {
    const std::string err_file = path("stderr.txt");
    const std::string cmd = (env.empty() ? "" : env + " ") +
                            std::string(MBPM_CLI_PATH) + " " + args + " 2>" + err_file;
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.err = read("stderr.txt");
    return result;
  }

private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  fs::path dir_;
};

}  // namespace

TEST_CASE("analyze: unit-volume fixture has zero gaps everywhere") {
  CliFixture fx;
  fx.write("ticks.csv", "t,price,volume\n0,2,1\n1,4,1\n2,3,1\n3,5,1\n");
  const auto run = fx.run("analyze --input " + fx.path("ticks.csv") +
                          " --delta 10 --origin 0 --out " + fx.path("rep.json") +
                          " --no-timestamp");
  REQUIRE(run.exit_code == 0);
  const json rep = fx.read_json("rep.json");
  CHECK(rep["tool"] == "mbpm");
  CHECK(rep["summary"]["occupied"] == 1);
  CHECK(rep["summary"]["gap_quantiles"]["max"] == 0.0);
  for (const auto& gap : rep["windows"][0]["gaps"]) CHECK(gap.get<double>() == 0.0);
}

TEST_CASE("analyze: divergence fixture reports the negative variance") {
  CliFixture fx;
  fx.write("ticks.csv", "t,price,volume\n0,1,10\n1,10,1\n");
  const auto run = fx.run("analyze --input " + fx.path("ticks.csv") +
                          " --delta 10 --origin 0 --out " + fx.path("rep.json") +
                          " --no-timestamp");
  REQUIRE(run.exit_code == 0);
  const json rep = fx.read_json("rep.json");
  const auto& w = rep["windows"][0];
  CHECK(w["var_p"].get<double>() == doctest::Approx(-1.325587104164962).epsilon(1e-12));
  CHECK(w["var_p_negative"] == true);
  CHECK(rep["summary"]["negative_variance_windows"] == 1);
}

TEST_CASE("analyze: missing input exits 2, bad flags exit 3") {
  CliFixture fx;
  CHECK(fx.run("analyze --input " + fx.path("absent.csv") + " --delta 10 --out " +
               fx.path("rep.json"))
            .exit_code == 2);
  fx.write("ticks.csv", "t,price,volume\n0,2,1\n");
  CHECK(fx.run("analyze --input " + fx.path("ticks.csv") + " --delta -5 --out " +
               fx.path("rep.json"))
            .exit_code == 3);
  const auto bad_row = fx.run("analyze --input " + fx.path("ticks.csv") +
                              " --delta 10 --out " + fx.path("rep.json") +
                              " --max-n 99");
  CHECK(bad_row.exit_code == 3);
}

TEST_CASE("analyze: corrupt tick rows exit 2 with the row in the message") {
  CliFixture fx;
  fx.write("ticks.csv", "t,price,volume\n0,2,1\n1,-3,1\n");
  const auto run = fx.run("analyze --input " + fx.path("ticks.csv") +
                          " --delta 10 --out " + fx.path("rep.json"));
  CHECK(run.exit_code == 2);
  CHECK(run.err.find("NonPositiveField") != std::string::npos);
  CHECK(run.err.find("row 3") != std::string::npos);
}

TEST_CASE("synth: same flags give identical bytes, n 0 exits 3") {
  CliFixture fx;
  const std::string flags =
      "synth --seed 11 --n 500 --spacing 0.5 --price walk:50,0.02 "
      "--volume pareto:2.5 --coupling 0.4 --out ";
  REQUIRE(fx.run(flags + fx.path("a.csv")).exit_code == 0);
  REQUIRE(fx.run(flags + fx.path("b.csv")).exit_code == 0);
  CHECK(fx.read("a.csv") == fx.read("b.csv"));

  CHECK(fx.run("synth --seed 1 --n 0 --out " + fx.path("z.csv")).exit_code == 3);
  CHECK(fx.run("synth --seed 1 --n 5 --price bogus:1 --out " + fx.path("z.csv"))
            .exit_code == 3);
}

TEST_CASE("synth piped into analyze keeps the unit-volume equivalence") {
  CliFixture fx;
  REQUIRE(fx.run("synth --seed 3 --n 400 --price walk:80,0.01 --volume const1 "
                 "--out " + fx.path("ticks.csv"))
              .exit_code == 0);
  REQUIRE(fx.run("analyze --input " + fx.path("ticks.csv") +
                 " --delta 25 --out " + fx.path("rep.json") + " --no-timestamp")
              .exit_code == 0);
  const json rep = fx.read_json("rep.json");
  CHECK(rep["summary"]["gap_quantiles"]["max"].get<double>() <= 1e-12);
}

TEST_CASE("measure: k=1 emits an atom record") {
  CliFixture fx;
  fx.write("ticks.csv", "t,price,volume\n0,2,3\n1,4,1\n");
  const auto run = fx.run("measure --input " + fx.path("ticks.csv") +
                          " --delta 10 --k 1 --window 0 --out " +
                          fx.path("atom.json") + " --no-timestamp");
  REQUIRE(run.exit_code == 0);
  const json atom = fx.read_json("atom.json");
  CHECK(atom["atom"]["location"].get<double>() == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(atom["atom"]["mass"] == 1.0);
  CHECK(atom["a"].size() == 1);
}

TEST_CASE("measure: k=2 grid quadrature recovers the mean") {
  CliFixture fx;
  REQUIRE(fx.run("synth --seed 9 --n 300 --price walk:100,0.01 --volume const1 "
                 "--out " + fx.path("ticks.csv"))
              .exit_code == 0);
  const auto run = fx.run("measure --input " + fx.path("ticks.csv") +
                          " --delta 1e9 --k 2 --window 0 --out " +
                          fx.path("grid.csv") + " --no-timestamp");
  REQUIRE(run.exit_code == 0);

  const json coeffs = fx.read_json("grid.json");
  const double a1 = coeffs["a"][0].get<double>();
  CHECK(coeffs["grid"]["mass"].get<double>() == doctest::Approx(1.0).epsilon(1e-8));

  std::istringstream grid(fx.read("grid.csv"));
  std::string line;
  std::getline(grid, line);
  REQUIRE(line == "p,eta");
  double mass = 0.0, mean = 0.0, prev_p = 0.0, step = 0.0;
  bool first = true;
  while (std::getline(grid, line)) {
    const auto comma = line.find(',');
    const double p = std::stod(line.substr(0, comma));
    const double eta = std::stod(line.substr(comma + 1));
    if (!first) step = p - prev_p;
    mass += eta;
    mean += eta * p;
    prev_p = p;
    first = false;
  }
  mass *= step;
  mean *= step;
  CHECK(mean / mass == doctest::Approx(a1).epsilon(1e-6));
}

TEST_CASE("measure: k=3 coefficients on the skewed fixture") {
  CliFixture fx;
  fx.write("ticks.csv", "t,price,volume\n0,1,1\n1,1,1\n2,4,1\n");
  const auto run = fx.run("measure --input " + fx.path("ticks.csv") +
                          " --delta 10 --k 3 --window 0 --out " +
                          fx.path("grid.csv") + " --no-timestamp");
  REQUIRE(run.exit_code == 0);
  const json coeffs = fx.read_json("grid.json");
  CHECK(coeffs["a"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(coeffs["a"][1].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(coeffs["a"][2].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(coeffs["grid"]["has_negative"].is_boolean());
}

TEST_CASE("measure: negative variance exits 4 and echoes sigma^2") {
  CliFixture fx;
  fx.write("ticks.csv", "t,price,volume\n0,1,10\n1,10,1\n");
  const auto run = fx.run("measure --input " + fx.path("ticks.csv") +
                          " --delta 10 --k 2 --window 0 --out " + fx.path("g.csv"));
  CHECK(run.exit_code == 4);
  CHECK(run.err.find("NonPositiveVariance") != std::string::npos);
  CHECK(run.err.find("-1.325587") != std::string::npos);

  CHECK(fx.run("measure --input " + fx.path("ticks.csv") +
               " --delta 10 --k 2 --window 42 --out " + fx.path("g.csv"))
            .exit_code == 3);
}

TEST_CASE("capm: idiosyncratic worked scenario") {
  CliFixture fx;
  fx.write("scen.json",
           R"({"alpha":0.5,"beta":0.99,"e_t":10,"e_t1":10,"p0":1,"var_p":0,)"
           R"("x0":1,"var_x":1,"sk_x":2,"R_f":1.05})");
  const auto run = fx.run("capm --scenario " + fx.path("scen.json") +
                          " --mode eq4_23 --out " + fx.path("sol.json") +
                          " --no-timestamp");
  REQUIRE(run.exit_code == 0);
  const json sol = fx.read_json("sol.json");
  CHECK(sol["solution"]["xi_4_23"].get<double>() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(sol["solution"]["vol_lower_4_25"].get<double>() ==
        doctest::Approx(0.07920255310420135).epsilon(1e-12));
  CHECK(sol["check_4_25"]["vol_line"]["holds"] == true);
}

TEST_CASE("capm: zero-volatility scenario exits 4 with the flag name") {
  CliFixture fx;
  fx.write("scen.json",
           R"({"alpha":0.5,"beta":0.99,"e_t":10,"e_t1":10,"p0":1,"var_p":0,)"
           R"("x0":1,"var_x":0,"sk_x":0})");
  const auto run = fx.run("capm --scenario " + fx.path("scen.json") +
                          " --mode eq4_5 --out " + fx.path("sol.json"));
  CHECK(run.exit_code == 4);
  CHECK(run.err.find("DegenerateDenominator") != std::string::npos);
}

TEST_CASE("capm: small-vol scenario classifies SMALL_VOL") {
  CliFixture fx;
  fx.write("scen.json",
           R"({"alpha":0.5,"beta":0.99,"e_t":20,"e_t1":20,"p0":1,"var_p":1,)"
           R"("x0":1.7320508075688772,"var_x":1,"sk_x":0,"mode":"eq4_5"})");
  const auto run = fx.run("capm --scenario " + fx.path("scen.json") + " --out " +
                          fx.path("sol.json") + " --no-timestamp");
  REQUIRE(run.exit_code == 0);
  const json sol = fx.read_json("sol.json");
  CHECK(sol["regime"]["regime"] == "SMALL_VOL");
  CHECK(sol["solution"]["residual"].get<double>() <= 1e-10);
}

TEST_CASE("capm: schema violations exit 3, malformed JSON exits 2") {
  CliFixture fx;
  fx.write("scen.json", R"({"alpha":0.5,"beta":0.99})");
  CHECK(fx.run("capm --scenario " + fx.path("scen.json") + " --mode eq4_5 --out " +
               fx.path("sol.json"))
            .exit_code == 3);

  fx.write("scen.json",
           R"({"alpha":1.5,"beta":0.99,"e_t":10,"e_t1":10,"p0":1,"var_p":0,)"
           R"("x0":1,"var_x":1,"sk_x":0})");
  CHECK(fx.run("capm --scenario " + fx.path("scen.json") + " --mode eq4_6 --out " +
               fx.path("sol.json"))
            .exit_code == 3);

  fx.write("scen.json", "{not json");
  CHECK(fx.run("capm --scenario " + fx.path("scen.json") + " --mode eq4_6 --out " +
               fx.path("sol.json"))
            .exit_code == 2);
}

TEST_CASE("sweep-delta: constant prices are delta-invariant, duplicates dedupe") {
  CliFixture fx;
  REQUIRE(fx.run("synth --seed 2 --n 300 --price const:5 --out " +
                 fx.path("ticks.csv"))
              .exit_code == 0);
  const auto run = fx.run("sweep-delta --input " + fx.path("ticks.csv") +
                          " --deltas 10,25,10 --max-n 3 --out " + fx.path("sweep.csv"));
  REQUIRE(run.exit_code == 0);
  CHECK(run.err.find("duplicate delta") != std::string::npos);

  std::istringstream csv(fx.read("sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "delta,window,N,p1,var_p,a3");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string delta, window, count, p1;
    std::getline(fields, delta, ',');
    std::getline(fields, window, ',');
    std::getline(fields, count, ',');
    std::getline(fields, p1, ',');
    CHECK((delta == "10" || delta == "25"));
    if (count != "0") CHECK(std::stod(p1) == doctest::Approx(5.0).epsilon(1e-12));
  }
  CHECK(rows > 10);
}

TEST_CASE("capm: payoff decomposition must compose to x0") {
  CliFixture fx;
  fx.write("scen.json",
           R"({"alpha":0.5,"beta":0.99,"e_t":20,"e_t1":20,"p0":1,"var_p":1,)"
           R"("x0":1.5,"var_x":1,"sk_x":0,"price_next":1.2,"dividend":0.2})");
  CHECK(fx.run("capm --scenario " + fx.path("scen.json") + " --mode eq4_5 --out " +
               fx.path("sol.json"))
            .exit_code == 3);

  fx.write("scen.json",
           R"({"alpha":0.5,"beta":0.99,"e_t":20,"e_t1":20,"p0":1,"var_p":1,)"
           R"("x0":1.5,"var_x":1,"sk_x":0,"price_next":1.2,"dividend":0.3})");
  CHECK(fx.run("capm --scenario " + fx.path("scen.json") + " --mode eq4_5 --out " +
               fx.path("sol.json") + " --no-timestamp")
            .exit_code == 0);
}

TEST_CASE("sweep-delta: window-mean dispersion flips across the step period") {
  CliFixture fx;
  REQUIRE(fx.run("synth --seed 77 --n 4000 --spacing 1 --price step:100,10,40 "
                 "--out " + fx.path("ticks.csv"))
              .exit_code == 0);
  // deltas straddle the 40 s disturbance period
  REQUIRE(fx.run("sweep-delta --input " + fx.path("ticks.csv") +
                 " --deltas 10,160 --max-n 2 --out " + fx.path("sweep.csv"))
              .exit_code == 0);

  std::map<std::string, std::vector<double>> p1_by_delta;
  std::istringstream csv(fx.read("sweep.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::string delta, window, count, p1;
    std::getline(fields, delta, ',');
    std::getline(fields, window, ',');
    std::getline(fields, count, ',');
    std::getline(fields, p1, ',');
    if (count != "0") p1_by_delta[delta].push_back(std::stod(p1));
  }

  const auto stddev = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
  };
  REQUIRE(p1_by_delta.at("10").size() > 100);
  REQUIRE(p1_by_delta.at("160").size() > 10);
  // windows narrower than the period see the regime flips; wide windows
  // average whole periods away
  CHECK(stddev(p1_by_delta.at("10")) > 3.0 * stddev(p1_by_delta.at("160")));
}

TEST_CASE("MBPM_THREADS does not change the report bytes") {
  CliFixture fx;
  REQUIRE(fx.run("synth --seed 5 --n 2000 --price walk:60,0.01 "
                 "--volume uniform:1,3 --out " + fx.path("t.csv"))
              .exit_code == 0);
  const std::string analyze = "analyze --input " + fx.path("t.csv") +
                              " --delta 40 --no-timestamp --out ";
  REQUIRE(fx.run(analyze + fx.path("par.json")).exit_code == 0);
  REQUIRE(fx.run(analyze + fx.path("one.json"), "MBPM_THREADS=1").exit_code == 0);
  CHECK(fx.read("par.json") == fx.read("one.json"));
}

TEST_CASE("reports are byte-identical across runs with --no-timestamp") {
  CliFixture fx;
  REQUIRE(fx.run("synth --seed 21 --n 400 --price walk:30,0.02 "
                 "--volume uniform:1,2,5 --coupling 0.5 --out " + fx.path("t.csv"))
              .exit_code == 0);
  const std::string analyze = "analyze --input " + fx.path("t.csv") +
                              " --delta 30 --max-n 4 --no-timestamp --out ";
  REQUIRE(fx.run(analyze + fx.path("r1.json")).exit_code == 0);
  REQUIRE(fx.run(analyze + fx.path("r2.json")).exit_code == 0);
  CHECK(fx.read("r1.json") == fx.read("r2.json"));
}
