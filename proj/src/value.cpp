#include "microflow/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "microflow/errors.hpp"

namespace microflow {

namespace {

const Value& null_value() {
  static const Value kNull;
  return kNull;
}

[[noreturn]] void type_error(const char* wanted, Value::Type got) {
  fail(ErrorCode::BadRequest,
       std::string("expected ") + wanted + ", got " + type_name(got));
}

void write_number(std::string& out, double d) {
  constexpr double kExactLimit = 9007199254740992.0;  // 2^53
  if (d == 0) {
    out += '0';  // also folds -0
    return;
  }
  if (std::trunc(d) == d && std::fabs(d) < kExactLimit) {
    out += std::to_string(static_cast<std::int64_t>(d));
    return;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  out.append(buf, res.ptr);
}

void write_string(std::string& out, std::string_view s) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void write_value(std::string& out, const Value& v) {
  switch (v.type()) {
    case Value::Type::Null: out += "null"; break;
    case Value::Type::Boolean: out += v.as_bool() ? "true" : "false"; break;
    case Value::Type::Number: write_number(out, v.as_number()); break;
    case Value::Type::String: write_string(out, v.as_string()); break;
    case Value::Type::List: {
      out += '[';
      bool first = true;
      for (const auto& item : v.as_list()) {
        if (!first) out += ',';
        first = false;
        write_value(out, item);
      }
      out += ']';
      break;
    }
    case Value::Type::Object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.as_object()) {
        if (!first) out += ',';
        first = false;
        write_string(out, key);
        out += ':';
        write_value(out, item);
      }
      out += '}';
      break;
    }
  }
}

Value from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return Value();
    case nlohmann::json::value_t::boolean: return Value(j.get<bool>());
    case nlohmann::json::value_t::number_integer:
      return Value(static_cast<double>(j.get<std::int64_t>()));
    case nlohmann::json::value_t::number_unsigned:
      return Value(static_cast<double>(j.get<std::uint64_t>()));
    case nlohmann::json::value_t::number_float: return Value(j.get<double>());
    case nlohmann::json::value_t::string:
      return Value(j.get_ref<const std::string&>());
    case nlohmann::json::value_t::array: {
      Value::List list;
      list.reserve(j.size());
      for (const auto& item : j) list.push_back(from_json(item));
      return Value(std::move(list));
    }
    case nlohmann::json::value_t::object: {
      Value::Object obj;
      for (const auto& [key, item] : j.items()) obj.emplace(key, from_json(item));
      return Value(std::move(obj));
    }
    default:
      fail(ErrorCode::BadRequest, "unsupported JSON value");
  }
}

}  // namespace

Value::Value(double d) : data_(d) {
  if (!std::isfinite(d)) fail(ErrorCode::BadRequest, "non-finite number");
}

bool Value::as_bool() const {
  if (!is_bool()) type_error("boolean", type());
  return std::get<bool>(data_);
}

double Value::as_number() const {
  if (!is_number()) type_error("number", type());
  return std::get<double>(data_);
}

std::int64_t Value::as_int() const {
  double d = as_number();
  if (std::trunc(d) != d) fail(ErrorCode::BadRequest, "expected integer");
  return static_cast<std::int64_t>(d);
}

const std::string& Value::as_string() const {
  if (!is_string()) type_error("string", type());
  return std::get<std::string>(data_);
}

const Value::List& Value::as_list() const {
  if (!is_list()) type_error("list", type());
  return std::get<List>(data_);
}

Value::List& Value::as_list() {
  if (!is_list()) type_error("list", type());
  return std::get<List>(data_);
}

const Value::Object& Value::as_object() const {
  if (!is_object()) type_error("object", type());
  return std::get<Object>(data_);
}

Value::Object& Value::as_object() {
  if (is_null()) data_ = Object{};
  if (!is_object()) type_error("object", type());
  return std::get<Object>(data_);
}

bool Value::contains(std::string_view key) const {
  if (!is_object()) return false;
  const auto& obj = std::get<Object>(data_);
  return obj.find(key) != obj.end();
}

const Value& Value::at(std::string_view key) const {
  const auto& obj = as_object();
  auto it = obj.find(key);
  if (it == obj.end()) {
    fail(ErrorCode::BadRequest, "missing field '" + std::string(key) + "'");
  }
  return it->second;
}

const Value& Value::get(std::string_view key) const {
  if (!is_object()) return null_value();
  const auto& obj = std::get<Object>(data_);
  auto it = obj.find(key);
  return it == obj.end() ? null_value() : it->second;
}

Value& Value::operator[](std::string_view key) {
  auto& obj = as_object();
  auto it = obj.find(key);
  if (it == obj.end()) it = obj.emplace(std::string(key), Value()).first;
  return it->second;
}

std::string canonicalize(const Value& value) {
  std::string out;
  write_value(out, value);
  return out;
}

Value parse_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadRequest, std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

const char* type_name(Value::Type type) {
  switch (type) {
    case Value::Type::Null: return "null";
    case Value::Type::Boolean: return "boolean";
    case Value::Type::Number: return "number";
    case Value::Type::String: return "string";
    case Value::Type::List: return "list";
    case Value::Type::Object: return "object";
  }
  return "?";
}

}  // namespace microflow
