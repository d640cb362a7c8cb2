import { ApiClient } from "./api.js";
import { SessionStore } from "./store.js";
import { mountApp } from "./ui.js";

const api = new ApiClient("");
const store = new SessionStore(api);
mountApp(document.getElementById("app")!, store);
void store.start();
