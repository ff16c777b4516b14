#include "sbssl/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "sbssl/dataset.hpp"
#include "sbssl/errors.hpp"

namespace sbssl {
namespace {

SynthSpec small_spec() {
  SynthSpec spec;
  spec.exams = 40;
  spec.f_min = 4;
  spec.f_max = 7;
  spec.image_size = 16;
  spec.seed = 7;
  return spec;
}

std::vector<const Volume*> all_volumes(const SyntheticDataset& ds) {
  std::vector<const Volume*> out;
  for (const Volume& v : ds.train) out.push_back(&v);
  for (const Volume& v : ds.val) out.push_back(&v);
  return out;
}

TEST(Synthetic, PositiveCountIsDeterministic) {
  SynthSpec spec = small_spec();
  spec.exams = 100;
  spec.positive_rate = 0.2;
  const SyntheticDataset ds = generate_synthetic(spec);
  int positives = 0;
  for (const Volume* v : all_volumes(ds)) positives += v->label;
  EXPECT_EQ(positives, 20);
  EXPECT_EQ(ds.train.size() + ds.val.size(), 100u);
}

TEST(Synthetic, SplitIsStratifiedAndKeepsBothClasses) {
  const SyntheticDataset ds = generate_synthetic(small_spec());
  auto count = [](const std::vector<Volume>& vs, int label) {
    return std::count_if(vs.begin(), vs.end(), [&](const Volume& v) { return v.label == label; });
  };
  EXPECT_GT(count(ds.train, 0), 0);
  EXPECT_GT(count(ds.train, 1), 0);
  EXPECT_GT(count(ds.val, 0), 0);
  EXPECT_GT(count(ds.val, 1), 0);
  // 40 exams, rate 0.25 -> 10 positives; fraction 0.2 -> 2 of 10 and 6 of 30.
  EXPECT_EQ(count(ds.val, 1), 2);
  EXPECT_EQ(count(ds.val, 0), 6);
}

TEST(Synthetic, VolumesRespectTheSpec) {
  const SynthSpec spec = small_spec();
  const SyntheticDataset ds = generate_synthetic(spec);
  std::vector<std::string> ids;
  for (const Volume* v : all_volumes(ds)) {
    EXPECT_GE(v->slice_count(), spec.f_min);
    EXPECT_LE(v->slice_count(), spec.f_max);
    EXPECT_EQ(v->height(), spec.image_size);
    EXPECT_EQ(v->width(), spec.image_size);
    EXPECT_EQ(v->plane, "sagittal");
    EXPECT_EQ(v->exam_id.size(), 4u);
    for (double p : v->slices.data()) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_EQ(p, static_cast<double>(static_cast<float>(p)));  // float-exact
    }
    ids.push_back(v->exam_id);
  }
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());  // unique ids
  EXPECT_EQ(ids.front(), "0000");
  EXPECT_EQ(ids.back(), "0039");
}

TEST(Synthetic, BandDiscriminantSeparatesClassesPerfectly) {
  const SynthSpec spec = small_spec();
  const SyntheticDataset ds = generate_synthetic(spec);
  double min_pos = 1e9;
  double max_neg = -1e9;
  for (const Volume* v : all_volumes(ds)) {
    const double score = band_mean_score(*v, spec);
    if (v->label == 1) {
      min_pos = std::min(min_pos, score);
    } else {
      max_neg = std::max(max_neg, score);
    }
  }
  // Perfect separation is what makes the downstream AUC-1.0 oracle valid.
  EXPECT_GT(min_pos, max_neg);
  EXPECT_GT(min_pos - max_neg, spec.band_contrast / 2.0);
}

TEST(Synthetic, MidSliceRangeCoversTheMiddleThird) {
  EXPECT_EQ(mid_slice_range(6), (std::pair<int, int>{2, 4}));
  EXPECT_EQ(mid_slice_range(9), (std::pair<int, int>{3, 6}));
  EXPECT_EQ(mid_slice_range(10), (std::pair<int, int>{3, 7}));
  EXPECT_EQ(mid_slice_range(1), (std::pair<int, int>{0, 1}));
  EXPECT_EQ(mid_slice_range(2), (std::pair<int, int>{0, 2}));
}

TEST(Synthetic, BandGeometryIsTheMainDiagonal) {
  EXPECT_TRUE(in_band(5, 5, 4));
  EXPECT_TRUE(in_band(5, 7, 4));
  EXPECT_FALSE(in_band(5, 8, 4));
  EXPECT_TRUE(in_band(7, 5, 4));
  EXPECT_FALSE(in_band(0, 15, 4));
}

TEST(Synthetic, OnlyMidSlicesOfPositivesCarryTheBand) {
  SynthSpec spec = small_spec();
  spec.distractor_blobs = 0;  // isolate the band signal
  spec.noise_level = 0.0;
  const SyntheticDataset ds = generate_synthetic(spec);
  for (const Volume* v : all_volumes(ds)) {
    const auto [first, last] = mid_slice_range(v->slice_count());
    for (int s = 0; s < v->slice_count(); ++s) {
      double slice_max = 0.0;
      const std::vector<double>& data = v->slices.data();
      for (int i = 0; i < spec.image_size * spec.image_size; ++i) {
        slice_max = std::max(
            slice_max,
            data[static_cast<std::size_t>(s) * spec.image_size * spec.image_size + i]);
      }
      const bool expect_band = v->label == 1 && s >= first && s < last;
      if (expect_band) {
        EXPECT_NEAR(slice_max, static_cast<double>(static_cast<float>(spec.band_contrast)), 1e-7);
      } else {
        EXPECT_EQ(slice_max, 0.0);
      }
    }
  }
}

TEST(Synthetic, SameSeedWritesByteIdenticalFiles) {
  const auto base = std::filesystem::temp_directory_path() / "sbssl_synth_tests";
  std::filesystem::remove_all(base);
  const auto root_a = (base / "a").string();
  const auto root_b = (base / "b").string();
  SynthSpec spec = small_spec();
  spec.exams = 10;
  write_synthetic(spec, root_a);
  write_synthetic(spec, root_b);

  auto read_file = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  int compared = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root_a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), root_a);
    const auto other = std::filesystem::path(root_b) / rel;
    ASSERT_TRUE(std::filesystem::exists(other)) << rel;
    EXPECT_EQ(read_file(entry.path()), read_file(other)) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, 12);  // 10 volumes + 2 manifests
}

TEST(Synthetic, WrittenDatasetLoadsBackExactly) {
  const auto root =
      (std::filesystem::temp_directory_path() / "sbssl_synth_tests" / "load").string();
  std::filesystem::remove_all(root);
  SynthSpec spec = small_spec();
  spec.exams = 8;
  const SyntheticDataset ds = write_synthetic(spec, root);

  const std::vector<Volume> train = load_split(root, "train", spec.plane);
  const std::vector<Volume> val = load_split(root, "valid", spec.plane);
  ASSERT_EQ(train.size(), ds.train.size());
  ASSERT_EQ(val.size(), ds.val.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    EXPECT_EQ(train[i].exam_id, ds.train[i].exam_id);
    EXPECT_EQ(train[i].label, ds.train[i].label);
    ASSERT_EQ(train[i].slices.shape(), ds.train[i].slices.shape());
    EXPECT_EQ(train[i].slices.data(), ds.train[i].slices.data());  // bit-exact
  }
}

TEST(Synthetic, LabelManifestRoundTrips) {
  const auto dir = std::filesystem::temp_directory_path() / "sbssl_synth_tests";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "manifest.csv").string();
  const std::vector<LabeledExam> exams = {{"0000", 1}, {"0001", 0}, {"0002", 1}};
  write_label_csv(path, exams);
  const auto back = read_label_csv(path);
  ASSERT_EQ(back.size(), exams.size());
  for (std::size_t i = 0; i < exams.size(); ++i) {
    EXPECT_EQ(back[i].exam_id, exams[i].exam_id);
    EXPECT_EQ(back[i].label, exams[i].label);
  }
}

TEST(Synthetic, ManifestRejectsBadHeaderAndLabels) {
  const auto dir = std::filesystem::temp_directory_path() / "sbssl_synth_tests";
  std::filesystem::create_directories(dir);
  const auto bad_header = dir / "bad_header.csv";
  std::ofstream(bad_header) << "id,y\n0000,1\n";
  EXPECT_THROW(read_label_csv(bad_header.string()), DataError);
  const auto bad_label = dir / "bad_label.csv";
  std::ofstream(bad_label) << "exam_id,label\n0000,2\n";
  EXPECT_THROW(read_label_csv(bad_label.string()), DataError);
  EXPECT_THROW(read_label_csv((dir / "missing.csv").string()), DataError);
}

TEST(Synthetic, RejectsDegenerateSpecs) {
  SynthSpec spec = small_spec();
  spec.positive_rate = 0.0;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = small_spec();
  spec.positive_rate = 1.0;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = small_spec();
  spec.exams = 1;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = small_spec();
  spec.f_min = 5;
  spec.f_max = 3;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

}  // namespace
}  // namespace sbssl
