import { ApiClient } from "./api.js";
import { mount } from "./app.js";

// Same-origin by default (serve --static); override with ?api=http://host:port
const params = new URLSearchParams(window.location.search);
mount(document, new ApiClient(params.get("api") ?? ""));
