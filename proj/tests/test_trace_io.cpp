#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "hyperclean/trace_io.hpp"
#include "support/fixtures.hpp"

using namespace hyperclean;
namespace fs = std::filesystem;

namespace {

Trace parse(const std::string& text) {
  std::istringstream is(text);
  return parse_trace_csv(is);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const data_error& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(TraceCsv, ParsesAllKinds) {
  const Trace w = parse("t,kind,value\n0,in,1\n1,out,2.5\n2,quiescent,\n");
  EXPECT_EQ(w, Trace({in(1), out(2.5), quiet()}));
  EXPECT_EQ(parse("t,kind,value\r\n0,pair,1;2\r\n"), Trace({pair(1, 2)}));
}

TEST(TraceCsv, RoundTripIsByteExact) {
  for (const Trace& w : {fixtures::w0(), fixtures::wB(), fixtures::w_bad(), fixtures::mixed_w()}) {
    std::ostringstream a;
    write_trace_csv(a, w);
    const Trace back = parse(a.str());
    EXPECT_EQ(back, w);
    std::ostringstream b;
    write_trace_csv(b, back);
    EXPECT_EQ(a.str(), b.str());
  }
}

TEST(TraceCsv, ReportsOffendingLine) {
  EXPECT_EQ(error_line("t,kind,value\n0,in,1\n1,in,abc\n"), 3u);
  EXPECT_EQ(error_line("t,kind,value\n0,in,1\n2,in,1\n"), 3u);
  EXPECT_EQ(error_line("t,kind,value\n0,sideways,1\n"), 2u);
  EXPECT_EQ(error_line("time,value\n"), 1u);
  EXPECT_EQ(error_line("t,kind,value\n0,quiescent,4\n"), 2u);
  EXPECT_EQ(error_line("t,kind,value\n0,pair,1\n"), 2u);
  EXPECT_EQ(error_line("t,kind,value\n0,in,nan\n"), 2u);
  EXPECT_THROW(parse("t,kind,value\n"), data_error);
}

TEST(TraceCsv, MixingPairsWithMixedSymbolsIsRejected) {
  EXPECT_THROW(parse("t,kind,value\n0,pair,1;2\n1,in,3\n"), data_error);
}

TEST(TraceCsv, DirectoryLoadsInNameOrder) {
  const fs::path dir = fs::temp_directory_path() / "hyperclean_trace_dir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_trace_csv(dir / "b.csv", fixtures::w1());
  save_trace_csv(dir / "a.csv", fixtures::w0());
  std::ofstream(dir / "notes.txt") << "ignored";
  const auto traces = load_trace_dir(dir);
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_EQ(traces[0].first, "a.csv");
  EXPECT_EQ(traces[0].second, fixtures::w0());
  EXPECT_EQ(traces[1].second, fixtures::w1());
  EXPECT_THROW(load_trace_dir(dir / "missing"), data_error);
  EXPECT_THROW(load_trace_csv(dir / "missing.csv"), data_error);
  fs::remove_all(dir);
}

TEST(TraceCsv, ShippedExamplesMatchFixtures) {
  const fs::path data = HYPERCLEAN_DATA_DIR;
  EXPECT_EQ(load_trace_csv(data / "pair" / "w_bad.csv"), fixtures::w_bad());
  EXPECT_EQ(load_trace_csv(data / "pair" / "wA.csv"), fixtures::wA());
  EXPECT_EQ(load_trace_csv(data / "mixed" / "std_w1.csv"), fixtures::mixed_w1());
  EXPECT_EQ(load_trace_csv(data / "mixed" / "subjects" / "w.csv"), fixtures::mixed_w());
}
