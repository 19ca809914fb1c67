// Copyright 2026 The SmoothCLAP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "smoothclap/config.hpp"
#include "smoothclap/io.hpp"
#include "test_support.hpp"

namespace smoothclap {
namespace {

using testing::as_vector;
using testing::code_of;

TEST(Config, DefaultsResolve) {
  const TrainConfig t = RunConfig{}.train_config();
  EXPECT_EQ(t.batchSize, 32u);
  EXPECT_EQ(t.epochs, 10u);
  EXPECT_EQ(t.lrProjection, 1e-3);
  EXPECT_EQ(t.embedDim, 16u);
  EXPECT_EQ(t.smoothing.gamma, 0.5);
  EXPECT_EQ(t.smoothing.beta, 0.1);
  EXPECT_EQ(t.smoothing.tauPred, 0.1);
  EXPECT_EQ(t.objective, Objective::Smooth);
  EXPECT_EQ(t.smoothing.klMode, KlMode::Symmetric);
}

TEST(Config, FileNestingAndFlagOverride) {
  testing::TempDir dir;
  write_text_file(dir / "c.json", R"({"seed": 5, "smoothing": {"beta": 0.3, "kl_mode": "forward"},
                                      "train": {"epochs": 2}})");
  RunConfig c = RunConfig::from_file(dir / "c.json");
  c.set("smoothing.beta", 0.7);  // a command-line flag wins over the file
  const TrainConfig t = c.train_config();
  EXPECT_EQ(t.seed, 5u);
  EXPECT_EQ(t.smoothing.beta, 0.7);
  EXPECT_EQ(t.smoothing.klMode, KlMode::ForwardOnly);
  EXPECT_EQ(t.epochs, 2u);
  EXPECT_EQ(c.effective()["smoothing"]["beta"], 0.7);
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of([] { RunConfig::from_json({{"smoothing", {{"betta", 0.1}}}}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { RunConfig::from_json(nlohmann::json::array()); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { RunConfig::from_json({{"train", {{"objective", "triplet"}}}}).train_config(); }),
            ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { RunConfig::from_json({{"train", {{"epochs", "ten"}}}}).train_config(); }),
            ErrorCode::InvalidConfig);
  testing::TempDir dir;
  write_text_file(dir / "bad.json", "{not json");
  EXPECT_EQ(code_of([&] { RunConfig::from_file(dir / "bad.json"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { RunConfig::from_file(dir / "missing.json"); }), ErrorCode::IoError);
}

TEST(Base64, RoundTripsEveryLength) {
  for (std::size_t n = 0; n < 10; ++n) {
    std::vector<unsigned char> bytes(n);
    for (std::size_t i = 0; i < n; ++i) bytes[i] = static_cast<unsigned char>(37 * i + 250);
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes) << n;
  }
  EXPECT_EQ(base64_encode(std::vector<unsigned char>{'M', 'a', 'n'}), "TWFu");
  EXPECT_EQ(code_of([] { base64_decode("abc"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { base64_decode("a*cd"); }), ErrorCode::ParseError);
}

TEST(Base64, DoublesAreBitExact) {
  const std::vector<double> v{0.1, -0.0, 1e-300, std::numeric_limits<double>::max(), M_PI};
  const auto back = decode_doubles(encode_doubles(v));
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(std::signbit(back[i]), std::signbit(v[i]));
  EXPECT_EQ(back, v);
  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Matrix mb = matrix_from_json(matrix_to_json(m));
  EXPECT_EQ(mb.rows(), 2u);
  EXPECT_EQ(as_vector(mb.data()), as_vector(m.data()));
}

TEST(Csv, ReadsIdMatrixAndSkipsMeta) {
  testing::TempDir dir;
  write_text_file(dir / "f.csv", "# {\"tool\":\"smoothclap\"}\nid, a ,b\nx,1.5,-2\n\ny,+3,4e-1\n");
  const IdMatrix m = read_id_matrix_csv(dir / "f.csv");
  EXPECT_EQ(m.ids, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(as_vector(m.values.data()), (std::vector<double>{1.5, -2, 3, 0.4}));
}

TEST(Csv, Errors) {
  testing::TempDir dir;
  write_text_file(dir / "ragged.csv", "id,a,b\nx,1\n");
  EXPECT_EQ(code_of([&] { read_id_matrix_csv(dir / "ragged.csv"); }), ErrorCode::RaggedRows);
  write_text_file(dir / "nan.csv", "id,a\nx,nan\n");
  EXPECT_EQ(code_of([&] { read_id_matrix_csv(dir / "nan.csv"); }), ErrorCode::NonNumericCell);
  write_text_file(dir / "word.csv", "id,a\nx,high\n");
  EXPECT_EQ(code_of([&] { read_id_matrix_csv(dir / "word.csv"); }), ErrorCode::NonNumericCell);
  write_text_file(dir / "dup.csv", "id,a\nx,1\nx,2\n");
  EXPECT_EQ(code_of([&] { read_id_matrix_csv(dir / "dup.csv"); }), ErrorCode::DuplicateId);
  write_text_file(dir / "hdr.csv", "name,a\nx,1\n");
  EXPECT_EQ(code_of([&] { read_id_matrix_csv(dir / "hdr.csv"); }), ErrorCode::ParseError);
  write_text_file(dir / "empty.csv", "id,a\n");
  EXPECT_EQ(code_of([&] { read_id_matrix_csv(dir / "empty.csv"); }), ErrorCode::EmptyInput);
}

TEST(Csv, WriterRoundTripsShortestDoubles) {
  const Matrix m = Matrix::from_rows({{0.1, 1.0 / 3.0}, {-2.5e-17, 7}});
  testing::TempDir dir;
  write_text_file(dir / "o.csv", id_matrix_csv({"p", "q"}, m, "e"));
  const IdMatrix back = read_id_matrix_csv(dir / "o.csv");
  EXPECT_EQ(as_vector(back.values.data()), as_vector(m.data()));
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Jsonl, SkipsMetaAndBlankLines) {
  testing::TempDir dir;
  write_text_file(dir / "r.jsonl", jsonl_meta_line({{"seed", 1}}) + "{\"id\":\"a\"}\n\n{\"id\":\"b\"}\n");
  const auto rows = read_jsonl(dir / "r.jsonl");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["id"], "b");
  write_text_file(dir / "bad.jsonl", "{\"id\":1}\n{oops\n");
  EXPECT_EQ(code_of([&] { read_jsonl(dir / "bad.jsonl"); }), ErrorCode::ParseError);
  EXPECT_EQ(csv_meta_line({{"a", 1}}), "# {\"a\":1}\n");
}

}  // namespace
}  // namespace smoothclap
