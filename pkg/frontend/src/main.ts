import { ApiClient } from "./api.js";
import { ConsoleController } from "./controller.js";
import { bindConsole } from "./render.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? `${window.location.protocol}//${window.location.hostname}:8000`;

bindConsole(new ConsoleController(new ApiClient(baseUrl)));
