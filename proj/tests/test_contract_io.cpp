#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "hyperclean/contract_io.hpp"
#include "support/fixtures.hpp"

using namespace hyperclean;
namespace fs = std::filesystem;

namespace {

ContractFile parse(const std::string& text) {
  std::istringstream is(text);
  return parse_contract(is);
}

ContractFile reload(const ContractFile& c) {
  std::istringstream is(dump_contract(c));
  return parse_contract(is);
}

}  // namespace

TEST(ContractFile, LoadsShippedRobustContract) {
  const fs::path dir = fs::path(HYPERCLEAN_DATA_DIR) / "pair";
  const ContractFile c = load_contract(dir / "robust.json");
  EXPECT_EQ(c.kind, ContractKind::robust);
  EXPECT_EQ(c.kappa_in, 1);
  EXPECT_EQ(c.kappa_out, 2);
  const RobustContext ctx = to_robust_context(c, dir);
  EXPECT_EQ(ctx.std, fixtures::pair_context().std);
  EXPECT_EQ(ctx.eq.base, DistanceFn::mixed_in());
  EXPECT_EQ(ctx.eq.epsilon, 0.001);
}

TEST(ContractFile, RoundTripIsBitExact) {
  ContractFile func;
  func.kind = ContractKind::func;
  func.d_in = DistanceFn::table({{0.1, 0.2, 0.30000000000000004}, {1, 2, kInf}});
  func.d_out = DistanceFn::euclid_normalized(3);
  func.f = PiecewiseFn({{0, 0.1, 1.0 / 3.0, 1e-300}, {0.1, kInf, 0, kInf}});
  func.epsilon = 0.1 + 0.2;
  func.std_files = {"a.csv", "dir/b.csv"};
  func.contract_form = true;

  ContractFile robust;
  robust.kappa_in = kInf;
  robust.kappa_out = 5e-324;
  robust.std_files = {"x.csv"};

  for (const ContractFile& c :
       {func, robust, from_fairness_contract(reference_fairness_contract()),
        load_contract(fs::path(HYPERCLEAN_DATA_DIR) / "mixed" / "robust.json")}) {
    const ContractFile once = reload(c);
    EXPECT_EQ(once, c);
    EXPECT_EQ(dump_contract(reload(once)), dump_contract(c));
  }
}

TEST(ContractFile, FairnessContractConverts) {
  const ContractFile c = load_contract(fs::path(HYPERCLEAN_DATA_DIR) / "fairness" / "reference.json");
  const FairnessContract fc = to_fairness_contract(c);
  EXPECT_EQ(fc.d_in, DistanceFn::euclid_normalized(5));
  EXPECT_EQ(fc.f, reference_fairness_bound());
  EXPECT_THROW(to_robust_context(c, "."), contract_error);
}

TEST(ContractFile, RejectsMalformedInput) {
  EXPECT_THROW(parse("{"), contract_error);
  EXPECT_THROW(parse("[]"), contract_error);
  EXPECT_THROW(parse(R"({"kind":"weird","d_in":"abs-diff-scalar","d_out":"abs-diff-scalar"})"),
               contract_error);
  EXPECT_THROW(parse(R"({"kind":"robust","d_in":"hamming","d_out":"abs-diff-scalar",
                         "kappa_in":1,"kappa_out":1,"std":["a.csv"]})"),
               contract_error);
  EXPECT_THROW(parse(R"({"kind":"robust","d_in":"abs-diff-mixed-in","d_out":"abs-diff-mixed-out",
                         "kappa_in":-1,"kappa_out":1,"std":["a.csv"]})"),
               contract_error);
  EXPECT_THROW(parse(R"({"kind":"robust","d_in":"abs-diff-mixed-in","d_out":"abs-diff-mixed-out",
                         "kappa_in":1,"kappa_out":1,"std":[]})"),
               contract_error);
  EXPECT_THROW(parse(R"({"kind":"func","d_in":"abs-diff-mixed-in","d_out":"abs-diff-mixed-out",
                         "f":[[0.5,1,1,0]],"std":["a.csv"]})"),
               contract_error);
  EXPECT_THROW(parse(R"({"kind":"fairness","d_in":{"name":"euclid-normalized"},
                         "d_out":"abs-diff-scalar","f":[[0,1,1,0]]})"),
               contract_error);
  EXPECT_THROW(parse(R"({"kind":"fairness","d_in":{"name":"euclid-normalized","dimension":2},
                         "d_out":"abs-diff-scalar","f":[[0,1,1,0]],"std":["a.csv"]})"),
               contract_error);
  EXPECT_THROW(parse(R"({"kind":"robust","d_in":"abs-diff-mixed-in","d_out":"abs-diff-mixed-out",
                         "kappa_in":1,"kappa_out":1,"epsilon":0,"std":["a.csv"]})"),
               contract_error);
}

TEST(ContractFile, AcceptsInfinityAsText) {
  const ContractFile c = parse(R"({"kind":"robust","d_in":"abs-diff-mixed-in",
      "d_out":"abs-diff-mixed-out","kappa_in":"inf","kappa_out":0,"std":["a.csv"]})");
  EXPECT_TRUE(is_pos_inf(c.kappa_in));
  EXPECT_NE(dump_contract(c).find("\"inf\""), std::string::npos);
}

TEST(ContractFile, MissingStdTraceIsDataError) {
  const ContractFile c = parse(R"({"kind":"robust","d_in":"abs-diff-mixed-in",
      "d_out":"abs-diff-mixed-out","kappa_in":1,"kappa_out":1,"std":["nowhere.csv"]})");
  EXPECT_THROW(to_robust_context(c, fs::temp_directory_path()), data_error);
  EXPECT_THROW(load_contract("/nonexistent/contract.json"), contract_error);
}
