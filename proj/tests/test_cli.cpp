#include <gtest/gtest.h>

#include <sstream>

#include "cli_app.hpp"
#include "test_util.hpp"

namespace featrec {
namespace {

namespace fs = std::filesystem;
using testing::read_text;
using testing::temp_dir;
using testing::write_text;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

TEST(CliGenerate, WritesTheRequestedShape) {
  const auto dir = temp_dir("cli_generate");
  const auto path = (dir / "ds.csv").string();
  const CliRun r = cli({"generate", "4000,7,3", "--out", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("4000 rows x 11 columns"), std::string::npos) << r.out;
  const Dataset ds = load_csv(path, "label");
  EXPECT_EQ(ds.n_rows(), 4000u);
  EXPECT_EQ(ds.n_features(), 10u);
}

TEST(CliGenerate, MinimalAndRepeatable) {
  const auto dir = temp_dir("cli_generate_min");
  const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string(), c = (dir / "c.csv").string();
  ASSERT_EQ(cli({"generate", "10,2,0", "--seed", "5", "--out", a}).code, 0);
  ASSERT_EQ(cli({"--seed", "5", "generate", "10,2,0", "--out", b}).code, 0);
  ASSERT_EQ(cli({"generate", "10,2,0", "--seed", "6", "--out", c}).code, 0);
  EXPECT_EQ(read_text(a), read_text(b));
  EXPECT_NE(read_text(a), read_text(c));
  EXPECT_EQ(load_csv(a, "label").n_rows(), 10u);
}

TEST(CliGenerate, Errors) {
  const auto dir = temp_dir("cli_generate_err");
  EXPECT_EQ(cli({"generate", "10,2", "--out", (dir / "x.csv").string()}).code, 2);
  EXPECT_EQ(cli({"generate", "10,0,3", "--out", (dir / "x.csv").string()}).code, 2);
  EXPECT_EQ(cli({"generate", "10,2,0", "--out", (dir / "missing" / "x.csv").string()}).code, 4);
  EXPECT_EQ(cli({"generate"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
}

std::string small_config(const fs::path& dir, const std::string& extra = "") {
  return write_text(dir / "run.cfg",
                    "dataset = synthetic:240,3,1\n"
                    "methods = knn, linreg-li, mice, identity\n"
                    "classifiers = LR, NB, KNN\n"
                    "fractions = 0.25, single\n"
                    "n_masks = 2\n"
                    "search_trials = 1\n" +
                        extra);
}

TEST(CliExperiment, WritesAllFilesAndIsByteIdenticalOnRerun) {
  const auto dir = temp_dir("cli_experiment");
  const auto cfg = small_config(dir);
  const CliRun a = cli({"experiment", "--config", cfg, "--out", (dir / "a").string(), "--jobs", "2", "--quiet"});
  const CliRun b = cli({"experiment", "--config", cfg, "--out", (dir / "b").string(), "--jobs", "1", "--quiet"});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {"report.csv", "report.md", "raw_cells.csv", "config.txt"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  }
  EXPECT_EQ(read_text(dir / "a" / "raw_cells.csv"), read_text(dir / "b" / "raw_cells.csv"));
  const std::string snapshot = read_text(dir / "a" / "config.txt");
  EXPECT_NE(snapshot.find("seed=20190707\n"), std::string::npos) << snapshot;
  EXPECT_NE(read_text(dir / "a" / "report.csv").find("# seed=20190707\n"), std::string::npos);
  // The snapshot is itself a valid config for the same run.
  EXPECT_EQ(parse_run_config(snapshot).methods.size(), 4u);

  const auto report = parse_raw_cells(read_text(dir / "a" / "raw_cells.csv"));
  for (const auto& c : report.cells) {
    if (c.imputer == ImputerMethod::identity) EXPECT_EQ(c.change_pp, 0.0);
  }
}

TEST(CliExperiment, FlagsOverrideTheConfigFile) {
  const auto dir = temp_dir("cli_experiment_flags");
  const auto cfg = small_config(dir);
  const CliRun r = cli({"experiment", "--config", cfg, "--seed", "99", "--methods", "identity", "--fractions", "0.5",
                     "--out", (dir / "o").string(), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string snapshot = read_text(dir / "o" / "config.txt");
  EXPECT_NE(snapshot.find("seed=99\n"), std::string::npos);
  EXPECT_NE(snapshot.find("methods=identity\n"), std::string::npos);
  EXPECT_NE(snapshot.find("fractions=0.5\n"), std::string::npos);
}

TEST(CliExperiment, InvalidConfigFailsBeforeAnyWork) {
  const auto dir = temp_dir("cli_experiment_bad");
  const auto cfg = write_text(dir / "run.cfg", "dataset = synthetic:240,3,1\nmethods = knn, nope\nclassifiers = SVM\n");
  const CliRun r = cli({"experiment", "--config", cfg, "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("SVM"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "o"));
  EXPECT_EQ(cli({"experiment", "--config", (dir / "absent.cfg").string()}).code, 4);
  EXPECT_EQ(cli({"experiment", "--dataset", "csv:" + (dir / "absent.csv").string(), "--out", (dir / "o").string()}).code,
            4);
}

TEST(CliExperiment, FailedCellsGiveExitThreeAndFilesAreStillWritten) {
  // Information ordering supports at most 8 dimensions; 10 features exceed it.
  const auto dir = temp_dir("cli_experiment_fail");
  const auto cfg = write_text(dir / "run.cfg",
                              "dataset = synthetic:200,7,3\n"
                              "methods = knn, linreg-li\n"
                              "classifiers = NB\n"
                              "fractions = 0.1\n"
                              "n_masks = 1\n"
                              "li_ordering = information-imputability\n");
  const CliRun r = cli({"experiment", "--config", cfg, "--out", (dir / "o").string(), "--quiet"});
  EXPECT_EQ(r.code, 3) << r.err;
  const std::string raw = read_text(dir / "o" / "raw_cells.csv");
  EXPECT_NE(raw.find("linreg-li,0.1,0,"), std::string::npos) << raw;
  EXPECT_NE(raw.find(",failed,"), std::string::npos) << raw;
  EXPECT_NE(raw.find("knn,0.1,0,"), std::string::npos) << raw;
  EXPECT_NE(read_text(dir / "o" / "report.md").find("## Failed cells"), std::string::npos);
}

// --- train / impute round trip ------------------------------------------------------------

struct TrainedImputer {
  fs::path dir;
  std::string data, model;
};

TrainedImputer train_linreg(const std::string& name) {
  TrainedImputer t{temp_dir(name), "", ""};
  t.data = (t.dir / "train.csv").string();
  t.model = (t.dir / "imp.json").string();
  EXPECT_EQ(cli({"generate", "200,3,1", "--out", t.data}).code, 0);
  const CliRun r = cli({"train-imputer", t.data, "--method", "linreg-li", "--missing", "2", "--out", t.model});
  EXPECT_EQ(r.code, 0) << r.err;
  return t;
}

std::string drop_column(const std::string& csv, std::size_t col) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    auto cells = detail::split_csv_line(line);
    cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(col));
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  }
  return out;
}

TEST(CliImpute, FillsADeclaredMissingColumnAndKeepsKnownCells) {
  const auto t = train_linreg("cli_impute");
  const std::string original = read_text(t.data);
  const auto input = write_text(t.dir / "in.csv", drop_column(original, 2));
  const auto out_path = (t.dir / "out.csv").string();
  const CliRun r = cli({"impute", input, "--model", t.model, "--missing", "2", "--out", out_path});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset filled = load_csv(out_path, "label");
  const Dataset truth = load_csv(t.data, "label");
  ASSERT_EQ(filled.n_features(), 4u);
  for (Eigen::Index j : {0, 1, 3}) EXPECT_EQ(filled.features.col(j), truth.features.col(j));
  EXPECT_TRUE(filled.features.allFinite());
  EXPECT_EQ(filled.labels, truth.labels);

  // Known cells are copied verbatim, so the filled CSV matches the
  // original wherever nothing was imputed.
  EXPECT_EQ(drop_column(read_text(out_path), 2), drop_column(original, 2));

  // Without --missing the absent column is detected.
  const auto out2 = (t.dir / "out2.csv").string();
  ASSERT_EQ(cli({"impute", input, "--model", t.model, "--out", out2}).code, 0);
  EXPECT_EQ(read_text(out2), read_text(out_path));

  // Declaring nothing missing on the filled file passes it through.
  const auto out3 = (t.dir / "out3.csv").string();
  ASSERT_EQ(cli({"impute", out_path, "--model", t.model, "--missing", "", "--out", out3}).code, 0);
  EXPECT_EQ(read_text(out3), read_text(out_path));
}

TEST(CliImpute, UncoveredColumnIsAMaskMismatch) {
  const auto t = train_linreg("cli_impute_mismatch");
  const auto input = write_text(t.dir / "in.csv", drop_column(read_text(t.data), 0));
  const CliRun r = cli({"impute", input, "--model", t.model, "--out", (t.dir / "o.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("do not match the model mask"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"impute", input, "--model", t.model, "--missing", "0", "--out", (t.dir / "o.csv").string()}).code, 2);
  // Unknown extra column in the input.
  const auto extra = write_text(t.dir / "extra.csv", "x0,x1,zzz,label\n1,2,3,0\n");
  EXPECT_EQ(cli({"impute", extra, "--model", t.model, "--out", (t.dir / "o.csv").string()}).code, 2);
  EXPECT_EQ(cli({"impute", input, "--model", (t.dir / "none.json").string(), "--out", (t.dir / "o.csv").string()}).code,
            4);
}

TEST(CliTrainClassifier, WritesALoadableModel) {
  const auto dir = temp_dir("cli_train_classifier");
  const auto data = (dir / "d.csv").string();
  ASSERT_EQ(cli({"generate", "300,3,1", "--out", data}).code, 0);
  const auto model = (dir / "nb.json").string();
  const CliRun r = cli({"train-classifier", data, "--family", "NB", "--out", model});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_classifier(model).family, ClassifierFamily::NB);
  EXPECT_EQ(cli({"train-classifier", data, "--family", "SVM", "--out", model}).code, 2);
}

TEST(CliReport, RebuildsReportsFromRawCells) {
  const auto dir = temp_dir("cli_report");
  const auto cfg = small_config(dir);
  ASSERT_EQ(cli({"experiment", "--config", cfg, "--out", (dir / "run").string(), "--quiet"}).code, 0);
  const CliRun r = cli({"report", (dir / "run" / "raw_cells.csv").string(), "--out", (dir / "re").string(), "--top", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("top 2:"), std::string::npos) << r.out;
  // Aggregates rebuilt from raw cells equal the ones written by the run.
  const auto a = parse_report_csv(read_text(dir / "run" / "report.csv"));
  const auto b = parse_report_csv(read_text(dir / "re" / "report.csv"));
  ASSERT_EQ(a.aggregates.size(), b.aggregates.size());
  for (const auto& [k, agg] : a.aggregates) {
    EXPECT_EQ(detail::csv_real(agg.mean_change_pp), detail::csv_real(b.aggregates.at(k).mean_change_pp));
    EXPECT_EQ(agg.n, b.aggregates.at(k).n);
  }
  const CliRun md = cli({"report", (dir / "run" / "report.csv").string()});
  ASSERT_EQ(md.code, 0) << md.err;
  EXPECT_NE(md.out.find("| identity |"), std::string::npos);
}

}  // namespace
}  // namespace featrec
