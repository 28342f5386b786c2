#include "sptrack/topology.hpp"

#include "sptrack/errors.hpp"

namespace sptrack {

NumInstance parse_topology(const KvDocument& doc, const TopologyDefaults& defaults) {
  doc.require_known({"network", "link", "flow", "region", "partition"});
  const auto nets = doc.all("network");
  if (nets.size() != 1)
    throw ConfigError(located(doc.source, nets.empty() ? 1 : nets[1]->line, 1, "exactly one [network] section required"));
  const KvSection& net = *nets[0];
  net.require_known({"nodes", "snr_db", "r_min", "r_max", "admit_tol"});
  NumInstance inst;
  inst.nodes = static_cast<int>(net.get_int("nodes"));
  if (inst.nodes < 2) net.fail(*net.find("nodes"), "at least two nodes required");
  const double snr = net.get_double("snr_db", defaults.snr_db);
  inst.r_min = net.get_double("r_min", defaults.r_min);
  inst.r_max = net.get_double("r_max", defaults.r_max);
  inst.admit_tol = net.get_double("admit_tol", defaults.admit_tol);

  auto node_of = [&](const KvSection& s, const char* key) {
    const long v = s.get_int(key);
    if (v < 1 || v > inst.nodes) s.fail(*s.find(key), "node " + std::to_string(v) + " out of range");
    return static_cast<int>(v);
  };

  for (const KvSection* s : doc.all("link")) {
    s->require_known({"tx", "rx", "power", "h_index"});
    NumLink l;
    l.tx = node_of(*s, "tx");
    l.rx = node_of(*s, "rx");
    if (l.tx == l.rx) s->fail(*s->find("rx"), "self-loop link");
    l.power = s->get_double("power", snr_power(snr, defaults.mean_sq_gain));
    if (!(l.power > 0.0)) s->fail(*s->find("power"), "power must be positive");
    l.h_index = static_cast<int>(s->get_int("h_index", static_cast<long>(inst.links.size())));
    if (l.h_index < 0) s->fail(*s->find("h_index"), "h_index must be nonnegative");
    inst.links.push_back(l);
  }
  if (inst.links.empty()) throw ConfigError(located(doc.source, net.line, 1, "no [link] sections"));

  for (const KvSection* s : doc.all("flow")) {
    s->require_known({"src", "dst", "route"});
    NumFlow f;
    f.src = node_of(*s, "src");
    f.dst = node_of(*s, "dst");
    if (!s->has("route")) s->fail("missing required key 'route'");
    const KvEntry& re = *s->find("route");
    for (long id : s->get_ints("route")) {
      if (id < 1 || id > static_cast<long>(inst.links.size()))
        s->fail(re, "route names unknown link " + std::to_string(id));
      f.route.push_back(static_cast<int>(id - 1));
    }
    const std::string tag = "route of flow (" + std::to_string(f.src) + "," + std::to_string(f.dst) + ")";
    if (inst.links[f.route.front()].tx != f.src) s->fail(re, tag + " does not start at the source node");
    for (size_t i = 0; i + 1 < f.route.size(); ++i)
      if (inst.links[f.route[i]].rx != inst.links[f.route[i + 1]].tx)
        s->fail(re, tag + " is not connected between links " + std::to_string(f.route[i] + 1) + " and " +
                        std::to_string(f.route[i + 1] + 1));
    if (inst.links[f.route.back()].rx != f.dst) s->fail(re, tag + " does not end at the destination node");
    inst.flows.push_back(std::move(f));
  }
  if (inst.flows.empty()) throw ConfigError(located(doc.source, net.line, 1, "no [flow] sections"));

  for (const KvSection* s : doc.all("region")) {
    s->require_known({"node", "mac_sum"});
    inst.mac_sum[node_of(*s, "node")] = s->get_bool("mac_sum", true);
  }
  for (const KvSection* s : doc.all("partition")) {
    s->require_known({"vars"});
    std::vector<int> g;
    for (long v : s->get_ints("vars")) g.push_back(static_cast<int>(v));
    inst.groups.push_back(std::move(g));
  }
  inst.validate();
  return inst;
}

NumInstance load_topology(const std::string& path, const TopologyDefaults& defaults) {
  return parse_topology(load_keyvalue(path), defaults);
}

}  // namespace sptrack
