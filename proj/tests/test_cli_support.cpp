#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "polygas/config.hpp"
#include "polygas/kernel_io.hpp"

using namespace polygas;

TEST(RunConfig, ParsesSectionsCommentsAndOverrides) {
  std::istringstream in("# run\nlattice.L = 3\n\nsim.h=0.25\nsim.h = 0.5\nflag=on\nname = chain a\n");
  auto c = RunConfig::parse(in);
  EXPECT_EQ(c.get_long("lattice.L", 0), 3);
  EXPECT_DOUBLE_EQ(c.get_double("sim.h", 0), 0.5);
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(c.get_string("name", ""), "chain a");
  EXPECT_DOUBLE_EQ(c.get_double("missing", 1.5), 1.5);
  c.set("sim.h", "0.75");
  EXPECT_DOUBLE_EQ(c.get_double("sim.h", 0), 0.75);
}

TEST(RunConfig, Errors) {
  std::istringstream bad("novalue\n");
  EXPECT_THROW(RunConfig::parse(bad), ConfigError);
  std::istringstream in("a=1\nb=x\nc=1.5\n");
  auto c = RunConfig::parse(in);
  EXPECT_THROW(c.require_known({"a", "b"}), ConfigError);
  EXPECT_NO_THROW(c.require_known({"a", "b", "c"}));
  EXPECT_THROW(c.get_double("b", 0), ConfigError);
  EXPECT_THROW(c.get_long("c", 0), ConfigError);
  EXPECT_THROW(c.get_bool("a", false) && c.get_bool("b", false), ConfigError);
  EXPECT_THROW(RunConfig::parse_file("/nonexistent/x.cfg"), ConfigError);
}

TEST(KernelFile, RoundTripAndLayout) {
  auto dir = std::filesystem::temp_directory_path() / "polygas_kernel_test";
  std::filesystem::remove_all(dir);
  KernelHeader hd;
  hd.d = 2;
  hd.rank = 2;
  hd.shape[0] = 3;
  hd.shape[1] = 4;
  hd.level = 2;
  std::vector<double> data(12);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = 0.5 * i - 1.0 / 3.0;
  auto path = dir / "k.bin";
  write_kernel(path, hd, data);
  EXPECT_FALSE(std::filesystem::exists(dir / "k.bin.tmp"));
  EXPECT_EQ(std::filesystem::file_size(path), 64u + 12 * 8);
  KernelHeader back;
  auto got = read_kernel(path, &back);
  EXPECT_EQ(got, data);
  EXPECT_EQ(back.d, 2u);
  EXPECT_EQ(back.shape[1], 4u);
  EXPECT_EQ(back.level, 2u);
  auto bytes = encode_kernel(hd, data);
  EXPECT_EQ(bytes.substr(0, 4), "PGKN");
  hd.shape[1] = 5;
  EXPECT_THROW(encode_kernel(hd, data), DomainError);
  atomic_write(dir / "junk.bin", "PGKX");
  EXPECT_THROW(read_kernel(dir / "junk.bin"), Error);
  std::filesystem::remove_all(dir);
}
