// Copyright 2026 The eqpnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "eqpnet_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  // Runs the tool with stdout captured to `out.txt`; returns the exit code.
  static int run(const std::string& args) {
    const std::string cmd = "cd '" + dir_.string() + "' && '" EQPNET_CLI_PATH "' " + args +
                            " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string slurp(const std::string& name) {
    std::ifstream is(dir_ / name);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  static fs::path dir_;
};

fs::path Cli::dir_;

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("gen --qubits 5 --out x"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("eqp --werner 2"), 1);
  EXPECT_EQ(run("sweep --data missing.jsonl --method svd"), 1);
}

TEST_F(Cli, MissingFilesExitWithThree) {
  EXPECT_EQ(run("tomo --counts nope.csv --qubits 2"), 3);
  EXPECT_NE(slurp("err.txt").find("nope.csv"), std::string::npos);
  EXPECT_EQ(run("report nope.csv"), 3);
}

TEST_F(Cli, MalformedCountsNameTheLine) {
  std::ofstream(dir_ / "bad.csv") << "projector_id,counts,shots\n0,5,10\n0,4,10\n";
  EXPECT_EQ(run("import --counts bad.csv --qubits 2"), 3);
  EXPECT_NE(slurp("err.txt").find("bad.csv:3"), std::string::npos) << slurp("err.txt");
}

TEST_F(Cli, CertifyWerner) {
  ASSERT_EQ(run("certify --werner 0.3"), 0);
  EXPECT_NE(slurp("out.txt").find("verdict classical-feasible"), std::string::npos);
  ASSERT_EQ(run("certify --werner 0.4"), 0);
  EXPECT_NE(slurp("out.txt").find("verdict entangled"), std::string::npos);
}

TEST_F(Cli, GenTrainSweepPipeline) {
  ASSERT_EQ(run("gen --qubits 2 --seed 3 --count 50 --test-count 6 --out d"), 0);
  for (const char* f : {"d/train.jsonl", "d/validation.jsonl", "d/test.jsonl"}) EXPECT_TRUE(fs::exists(dir_ / f));
  ASSERT_EQ(run("train --data d --out m.bin --width 8 --blocks 1 --epochs 2"), 0);
  ASSERT_EQ(run("sweep --data d/test.jsonl --method net --method maxlik --model m.bin --chain 2 36 --out s.csv"), 0);
  const std::string csv = slurp("s.csv");
  EXPECT_EQ(csv.rfind("method,size,mean_rmse,std_rmse,count,failures", 0), 0U) << csv;
  EXPECT_NE(csv.find("\nmaxlik,36,"), std::string::npos);
  EXPECT_NE(csv.find("\nnet,2,"), std::string::npos);
  ASSERT_EQ(run("report s.csv"), 0);
  EXPECT_NE(slurp("out.txt").find("maxlik"), std::string::npos);
}

TEST_F(Cli, DivergentTrainingExitsWithTwo) {
  ASSERT_EQ(run("gen --qubits 2 --seed 4 --count 20 --test-count 2 --out e"), 0);
  EXPECT_EQ(run("train --data e --out m.bin --width 8 --blocks 1 --epochs 3 --lr 1e300"), 2);
  EXPECT_NE(slurp("err.txt").find("diverged"), std::string::npos);
}

}  // namespace
