import { ApiClient } from "./api.js";
import { Cockpit } from "./cockpit.js";
import type { StreamCtor } from "./cockpit.js";

const api = new ApiClient("");
const cockpit = new Cockpit(
  document,
  api,
  EventSource as unknown as StreamCtor,
);
cockpit.start();
