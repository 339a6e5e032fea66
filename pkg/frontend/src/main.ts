import { mountConsole } from "./app";
import "./style.css";

// API base: ?api=... wins, then the build-time env, then the node's
// default port on this host
const params = new URLSearchParams(location.search);
const baseUrl =
  params.get("api") ??
  import.meta.env.VITE_API_BASE ??
  "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app");
mountConsole(root, { baseUrl });
