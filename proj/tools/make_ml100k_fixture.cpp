// Writes a deterministic synthetic rating log in the MovieLens-100k u.data
// layout (user \t item \t rating \t timestamp): 100000 ratings, 943 users,
// 1682 items, at least 20 ratings per user, drawn from a low-rank model.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <vector>

namespace {

constexpr int kUsers = 943;
constexpr int kItems = 1682;
constexpr int kRatings = 100000;
constexpr int kMinPerUser = 20;
constexpr int kRank = 8;

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double normal(std::mt19937_64& rng, double sd) {
  const double u1 = 1.0 - unit(rng);
  const double u2 = unit(rng);
  return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_ml100k_fixture OUTPUT\n";
    return 1;
  }
  std::mt19937_64 rng(100000);

  std::vector<double> user_bias(kUsers), item_bias(kItems), popularity(kItems);
  std::vector<std::vector<double>> uf(kUsers, std::vector<double>(kRank));
  std::vector<std::vector<double>> vf(kItems, std::vector<double>(kRank));
  for (int u = 0; u < kUsers; ++u) {
    user_bias[u] = normal(rng, 0.4);
    for (auto& x : uf[u]) x = normal(rng, 0.5);
  }
  for (int i = 0; i < kItems; ++i) {
    item_bias[i] = normal(rng, 0.5);
    for (auto& x : vf[i]) x = normal(rng, 0.5);
    popularity[i] = 1.0 / std::pow(i + 10.0, 0.9);
  }

  // Ratings per user: the floor plus a heavy-tailed share of the remainder.
  std::vector<double> share(kUsers);
  double share_sum = 0.0;
  for (auto& s : share) {
    s = -std::log(1.0 - unit(rng));
    s = s * s;
    share_sum += s;
  }
  std::vector<int> quota(kUsers);
  int assigned = 0;
  for (int u = 0; u < kUsers; ++u) {
    const double extra = (kRatings - kUsers * kMinPerUser) * share[u] / share_sum;
    quota[u] = std::min(kItems, kMinPerUser + static_cast<int>(extra));
    assigned += quota[u];
  }
  for (int u = 0; assigned < kRatings; u = (u + 1) % kUsers) {
    if (quota[u] < kItems) {
      ++quota[u];
      ++assigned;
    }
  }

  std::ofstream out(argv[1], std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << argv[1] << '\n';
    return 1;
  }
  std::int64_t timestamp = 874724710;
  std::vector<char> taken(kItems);
  for (int u = 0; u < kUsers; ++u) {
    std::fill(taken.begin(), taken.end(), 0);
    std::vector<int> items;
    // Every item is rated by someone.
    for (int i = u; i < kItems; i += kUsers) {
      items.push_back(i);
      taken[i] = 1;
    }
    // Popularity-weighted sampling without replacement.
    std::vector<std::pair<double, int>> keys;
    for (int i = 0; i < kItems; ++i) {
      if (!taken[i]) keys.emplace_back(std::log(unit(rng) + 1e-300) / popularity[i], i);
    }
    std::sort(keys.begin(), keys.end(), std::greater<>());
    for (std::size_t j = 0; static_cast<int>(items.size()) < quota[u]; ++j) {
      items.push_back(keys[j].second);
    }
    for (int i : items) {
      double score = 3.53 + user_bias[u] + item_bias[i] + normal(rng, 0.8);
      for (int f = 0; f < kRank; ++f) score += uf[u][f] * vf[i][f];
      const int rating = std::clamp(static_cast<int>(std::lround(score)), 1, 5);
      timestamp += 1 + static_cast<std::int64_t>(rng() % 97);
      out << (u + 1) << '\t' << (i + 1) << '\t' << rating << '\t' << timestamp << '\n';
    }
  }
  return out ? 0 : 1;
}
