#include <gtest/gtest.h>

#include "rkhs_logit/serialization.hpp"

using namespace rkhs_logit;

TEST(KernelJson, FbmRoundTrip) {
  const KernelSpec k = kernel_from_json(Json::parse(R"({"family":"fbm","hurst":0.9})"));
  EXPECT_EQ(k.family(), KernelFamily::FractionalBrownianMotion);
  EXPECT_DOUBLE_EQ(k.param("hurst"), 0.9);
  const KernelSpec back = kernel_from_json(kernel_to_json(k));
  for (double s : {0.1, 0.4, 0.9}) {
    for (double t : {0.2, 0.7}) EXPECT_EQ(back(s, t), k(s, t));
  }
  EXPECT_EQ(kernel_to_json(k), Json::parse(R"({"family":"fbm","hurst":0.9})"));
}

TEST(KernelJson, AllParametricFamilies) {
  for (const KernelSpec& k : {KernelSpec::brownian(), KernelSpec::ibm(), KernelSpec::ou(),
                              KernelSpec::scaled_brownian(2.5), KernelSpec::brownian_plus_linear()}) {
    const KernelSpec back = kernel_from_json(kernel_to_json(k));
    EXPECT_EQ(back.family(), k.family());
    EXPECT_EQ(back.params(), k.params());
  }
}

TEST(KernelJson, EmpiricalRoundTrip) {
  const FunctionalDataset d = make_dataset(DatasetGeneratorSpec{GeneratorId::OU, 30, 6, 2});
  const KernelSpec k = empirical_covariance(d);
  const KernelSpec back = kernel_from_json(Json::parse(kernel_to_json(k).dump()));
  EXPECT_EQ(back.table()->values, k.table()->values);
  EXPECT_EQ(back(0.33, 0.71), k(0.33, 0.71));
}

TEST(KernelJson, Rejections) {
  EXPECT_THROW(kernel_from_json(Json::parse(R"({"family":"nope"})")), ValidationError);
  EXPECT_THROW(kernel_from_json(Json::parse(R"({"hurst":0.5})")), ValidationError);
  EXPECT_THROW(kernel_from_json(Json::parse(R"({"family":"fbm","hurst":1.5})")), ValidationError);
  EXPECT_THROW(kernel_from_json(Json::parse(R"({"family":"fbm","hurst":"x"})")), ValidationError);
}

TEST(ModelJson, RoundTripPreservesPredictions) {
  const FunctionalDataset d = make_dataset(DatasetGeneratorSpec{GeneratorId::BmFin, 80, 21, 4});
  const PointModel m = fit_sequential(d, 2);
  const PointModel back = model_from_json(Json::parse(model_to_json(m).dump()));
  EXPECT_EQ(back.points, m.points);
  EXPECT_EQ(back.coefficients, m.coefficients);
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.loglik, m.loglik);
  EXPECT_EQ(back.method, m.method);
  ASSERT_EQ(back.trace.size(), m.trace.size());
  for (std::size_t k = 0; k < m.trace.size(); ++k) EXPECT_EQ(back.trace[k].point, m.trace[k].point);
  EXPECT_EQ(back.predict(d), m.predict(d));
  EXPECT_TRUE(back.predict_proba(d) == m.predict_proba(d));
}

TEST(ModelJson, Validation) {
  EXPECT_THROW(model_from_json(Json::parse(R"({"intercept":0,"coefficients":[1,2],"points":[0.5]})")),
               ValidationError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"intercept":0,"coefficients":[1,2],"points":[0.5,0.2]})")),
               ValidationError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"intercept":0,"coefficients":[1],"points":[1.5]})")),
               ValidationError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"coefficients":[1],"points":[0.5]})")), ValidationError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"intercept":0,"coefficients":[1],"points":[0.5],"method":"x"})")),
               ValidationError);
  EXPECT_NO_THROW(model_from_json(Json::parse(R"({"intercept":0,"coefficients":[1],"points":[0.5]})")));
}
