#include "schema_check.hpp"

#include <fstream>
#include <stdexcept>

namespace fxsv::testing {

namespace {

using nlohmann::json;

bool has_type(const json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    if (type == "null") return v.is_null();
    throw std::invalid_argument("unsupported schema type " + type);
}

void check(const json& root, const json& schema, const json& v, const std::string& path,
           std::vector<std::string>& errors) {
    if (schema.contains("$ref")) {
        const std::string ref = schema["$ref"].get<std::string>();
        if (ref.rfind("#/", 0) != 0) throw std::invalid_argument("only local references are supported: " + ref);
        check(root, root.at(json::json_pointer(ref.substr(1))), v, path, errors);
        return;
    }
    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_array()) {
            for (const auto& one : t) ok = ok || has_type(v, one.get<std::string>());
        } else {
            ok = has_type(v, t.get<std::string>());
        }
        if (!ok) {
            errors.push_back(path + ": expected type " + t.dump());
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == v;
        if (!found) errors.push_back(path + ": value " + v.dump() + " not in enum");
    }
    if (schema.contains("minimum") && v.is_number() && v.get<double>() < schema["minimum"].get<double>()) {
        errors.push_back(path + ": below minimum");
    }
    if (v.is_object()) {
        if (schema.contains("required")) {
            for (const auto& r : schema["required"]) {
                if (!v.contains(r.get<std::string>())) errors.push_back(path + ": missing " + r.get<std::string>());
            }
        }
        const json props = schema.value("properties", json::object());
        for (const auto& [k, child] : v.items()) {
            if (props.contains(k)) {
                check(root, props[k], child, path + "/" + k, errors);
            } else if (schema.contains("additionalProperties")) {
                const json& extra = schema["additionalProperties"];
                if (extra.is_boolean() && !extra.get<bool>()) {
                    errors.push_back(path + ": unexpected property " + k);
                } else if (extra.is_object()) {
                    check(root, extra, child, path + "/" + k, errors);
                }
            }
        }
    }
    if (v.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) check(root, schema["items"], v[i], path + "/" + std::to_string(i), errors);
    }
}

}  // namespace

std::vector<std::string> schema_errors(const json& schema, const json& value) {
    std::vector<std::string> errors;
    check(schema, schema, value, "", errors);
    return errors;
}

json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return json::parse(is);
}

}  // namespace fxsv::testing
